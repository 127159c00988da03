//! The shipped protocol corpus: well-formed protocols used by tests, demos and
//! the CLI, plus a negative corpus with one defect per file.

use crate::ast::ScribbleModule;
use crate::parse::parse_module;

pub const BATTLESHIP: &str = include_str!("../corpus/valid/battleship.scr");
pub const TWO_BUYER: &str = include_str!("../corpus/valid/two_buyer.scr");
pub const PING_PONG: &str = include_str!("../corpus/valid/ping_pong.scr");
pub const REC_ADDER: &str = include_str!("../corpus/valid/rec_adder.scr");
pub const RELAY: &str = include_str!("../corpus/valid/relay.scr");

pub const INVALID_CHOICE_SENDER: &str = include_str!("../corpus/invalid/choice_sender.scr");
pub const INVALID_DUP_LABEL: &str = include_str!("../corpus/invalid/dup_label.scr");
pub const INVALID_DO_ARITY: &str = include_str!("../corpus/invalid/do_arity.scr");
pub const INVALID_UNKNOWN_ALIAS: &str = include_str!("../corpus/invalid/unknown_alias.scr");
pub const INVALID_UNKNOWN_ROLE: &str = include_str!("../corpus/invalid/unknown_role.scr");
pub const INVALID_UNMERGEABLE: &str = include_str!("../corpus/invalid/unmergeable.scr");

/// `(file name, source)` for every well-formed protocol file.
pub const VALID: &[(&str, &str)] = &[
    ("battleship.scr", BATTLESHIP),
    ("two_buyer.scr", TWO_BUYER),
    ("ping_pong.scr", PING_PONG),
    ("rec_adder.scr", REC_ADDER),
    ("relay.scr", RELAY),
];

/// `(file name, source, expected diagnostic code)` for the negative corpus.
pub const INVALID: &[(&str, &str, &str)] = &[
    ("choice_sender.scr", INVALID_CHOICE_SENDER, "CHOICE_SENDER"),
    ("dup_label.scr", INVALID_DUP_LABEL, "DUP_LABEL"),
    ("do_arity.scr", INVALID_DO_ARITY, "DO_ARITY"),
    ("unknown_alias.scr", INVALID_UNKNOWN_ALIAS, "UNKNOWN_ALIAS"),
    ("unknown_role.scr", INVALID_UNKNOWN_ROLE, "UNKNOWN_ROLE"),
    ("unmergeable.scr", INVALID_UNMERGEABLE, "UNMERGEABLE"),
];

fn parsed(src: &str) -> ScribbleModule {
    parse_module(src).expect("corpus file parses")
}

pub fn battleship() -> ScribbleModule {
    parsed(BATTLESHIP)
}

pub fn two_buyer() -> ScribbleModule {
    parsed(TWO_BUYER)
}

pub fn ping_pong() -> ScribbleModule {
    parsed(PING_PONG)
}

pub fn rec_adder() -> ScribbleModule {
    parsed(REC_ADDER)
}

pub fn relay() -> ScribbleModule {
    parsed(RELAY)
}

use std::collections::BTreeMap;
use std::path::PathBuf;

use mpst_core::codegen::{generate_protocol, ApiOptions, ImportMap};
use mpst_core::{corpus, parse_module};

fn main() {
    let out = PathBuf::from(std::env::var("OUT_DIR").unwrap());
    let module = parse_module(corpus::BATTLESHIP).expect("battleship.scr parses");
    let imports = ImportMap {
        aliases: BTreeMap::from([
            ("Location".to_string(), "crate::model::Location".to_string()),
            ("Config".to_string(), "crate::model::Config".to_string()),
        ]),
    };
    let art = generate_protocol(&module, "BattleShips", &[], Some(&imports), &ApiOptions::new("game"))
        .expect("battleship API generates");
    art.write_to(&out).expect("write generated API");
    println!("cargo::rerun-if-changed=build.rs");
}

//! Regenerates include/sdnlse.h from the exported C ABI on every build.

use std::path::PathBuf;

fn main() {
    let crate_dir = PathBuf::from(std::env::var("CARGO_MANIFEST_DIR").unwrap());
    let header = crate_dir.join("include").join("sdnlse.h");

    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");

    let bindings = cbindgen::generate(&crate_dir)
        .expect("generating the C header from the exported ABI failed");
    // write_to_file leaves the file untouched when the content is unchanged,
    // so downstream rebuilds are not retriggered.
    bindings.write_to_file(header);
}

fn main() {
    println!("cargo:rerun-if-changed=csrc/oracle.c");
    cc::Build::new().file("csrc/oracle.c").warnings(true).compile("jpeg_oracle");
    println!("cargo:rustc-link-lib=jpeg");
}

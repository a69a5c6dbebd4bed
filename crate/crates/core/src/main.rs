fn main() {
    std::process::exit(crmls::cli::main())
}

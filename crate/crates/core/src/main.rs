fn main() -> std::process::ExitCode {
    nsarb::cli::main()
}

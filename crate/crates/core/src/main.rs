fn main() -> std::process::ExitCode {
    conciseness::cli::main()
}

fn main() -> std::process::ExitCode {
    simptopo::cli::main()
}

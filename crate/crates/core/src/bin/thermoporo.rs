fn main() -> std::process::ExitCode {
    thermoporo::cli::main()
}

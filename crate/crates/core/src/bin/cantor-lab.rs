fn main() -> std::process::ExitCode {
    cantor_lab::cli::main()
}

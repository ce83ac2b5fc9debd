fn main() -> std::process::ExitCode {
    eql_cli::run()
}

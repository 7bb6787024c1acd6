fn main() -> std::process::ExitCode {
    wmar::cli::run()
}

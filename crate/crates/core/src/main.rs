fn main() -> std::process::ExitCode {
    tslab::cli::run(std::env::args_os())
}

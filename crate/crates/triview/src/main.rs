fn main() -> std::process::ExitCode {
    triview::cli::main_with_args(std::env::args_os())
}

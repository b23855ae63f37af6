fn main() -> std::process::ExitCode {
    tomostitch::cli::main_with_args(std::env::args_os())
}

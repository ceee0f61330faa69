fn main() -> std::process::ExitCode {
    capta::cli::main_with_args(std::env::args_os())
}

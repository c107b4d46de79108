fn main() -> std::process::ExitCode {
    mortality_slowdown::cli::main_from(std::env::args_os())
}

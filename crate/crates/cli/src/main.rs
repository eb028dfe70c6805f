fn main() -> std::process::ExitCode {
    boicp_cli::main_exit()
}

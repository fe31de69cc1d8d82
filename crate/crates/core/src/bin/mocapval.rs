fn main() -> std::process::ExitCode {
    mocap_xval::cli::main()
}

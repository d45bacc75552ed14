fn main() -> std::process::ExitCode {
    sphere_kl::cli::main_entry()
}

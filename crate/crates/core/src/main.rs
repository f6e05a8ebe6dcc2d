fn main() {
    std::process::exit(crowdteam::cli::run_cli(std::env::args_os()));
}

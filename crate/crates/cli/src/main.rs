fn main() {
    std::process::exit(aoi_shs_cli::execute(std::env::args_os()));
}

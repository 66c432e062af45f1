fn main() {
    std::process::exit(vdcorput::cli::run(std::env::args_os()));
}

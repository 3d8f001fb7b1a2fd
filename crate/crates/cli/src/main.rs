fn main() {
    let seed = std::env::var(ruinlab_cli::SEED_ENV).ok();
    std::process::exit(ruinlab_cli::main_with(std::env::args_os(), seed.as_deref()));
}

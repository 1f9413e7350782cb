fn main() { std::process::exit(authorgraph::cli::dispatch(std::env::args_os())); }

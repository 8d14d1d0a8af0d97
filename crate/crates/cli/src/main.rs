use std::process::ExitCode;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    std::panic::set_hook(Box::new(|info| {
        eprintln!("ratnmt: internal error: {info}");
        std::process::exit(3);
    }));
    ExitCode::from(ratnmt_cli::run(std::env::args_os()))
}

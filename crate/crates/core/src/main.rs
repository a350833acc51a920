use std::io;

fn main() {
    let env_vt = std::env::var(ccccta::cli::VT_ENV).ok();
    let code = ccccta::cli::run(
        std::env::args_os(),
        env_vt.as_deref(),
        &mut io::stdout().lock(),
        &mut io::stderr().lock(),
    );
    std::process::exit(code);
}

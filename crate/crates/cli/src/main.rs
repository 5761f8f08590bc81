use std::io;

fn main() {
    let env_out = std::env::var_os(ahdiag_cli::OUT_ENV).filter(|v| !v.is_empty()).map(Into::into);
    let code = ahdiag_cli::run(std::env::args_os(), env_out, &mut io::stdout(), &mut io::stderr());
    std::process::exit(code);
}

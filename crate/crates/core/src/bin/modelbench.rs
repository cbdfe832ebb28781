use std::io::{BufRead, IsTerminal, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::Parser;
use modelbench::collab::{self, Hub, Repository, ServerConfig};
use modelbench::console::{self, Action, Session, EXIT_COMMAND, EXIT_OK, EXIT_VALIDATION};

/// Model workbench console.
///
/// Runs commands from `-e`, from a script file (`-` for stdin), or
/// interactively when neither is given.
#[derive(Parser, Debug)]
#[command(version)]
struct Cli {
    /// Command script, one command per line.
    script: Option<PathBuf>,
    /// Command to run; repeatable, runs before the script.
    #[arg(short = 'e', long = "exec")]
    exec: Vec<String>,
    /// Shared secret required by `serve`.
    #[arg(long, env = "MODELBENCH_TOKEN", default_value = "modelbench")]
    token: String,
    /// Directory for project records when serving; in memory if absent.
    #[arg(long)]
    data_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .init();
    let cli = Cli::parse();
    let mut session = Session::new();

    let mut script = cli.exec.join("\n");
    match &cli.script {
        Some(p) if p.as_os_str() == "-" => {
            if let Err(e) = std::io::stdin().read_to_string(&mut script) {
                eprintln!("stdin: {e}");
                return ExitCode::from(EXIT_COMMAND as u8);
            }
        }
        Some(p) => match std::fs::read_to_string(p) {
            Ok(text) => {
                script.push('\n');
                script.push_str(&text);
            }
            Err(e) => {
                eprintln!("{}: {e}", p.display());
                return ExitCode::from(EXIT_COMMAND as u8);
            }
        },
        None => {}
    }

    let (code, serve) = if cli.script.is_some() || !cli.exec.is_empty() {
        let (out, code, serve) = console::run_script(&mut session, &script);
        print!("{out}");
        (code, serve)
    } else {
        interactive(&mut session)
    };
    let _ = std::io::stdout().flush();

    match serve {
        Some(port) => run_server(session, &cli, port),
        None => ExitCode::from(code as u8),
    }
}

/// Reads commands until end of input. Failing commands are reported and
/// the loop continues; the exit code reflects the last failure.
fn interactive(session: &mut Session) -> (i32, Option<u16>) {
    let tty = std::io::stdin().is_terminal();
    let mut code = EXIT_OK;
    let stdin = std::io::stdin();
    let mut lines = stdin.lock().lines();
    loop {
        if tty {
            print!("> ");
            let _ = std::io::stdout().flush();
        }
        let Some(Ok(line)) = lines.next() else { break };
        let mut out = String::new();
        let result = session.execute(&line, &mut out);
        print!("{out}");
        match result {
            Ok(Action::Continue) => {}
            Ok(Action::ValidationFailed) => code = EXIT_VALIDATION,
            Ok(Action::Serve { port }) => return (code, Some(port)),
            Err(e) => {
                println!("error: {}", session.explain(&e));
                code = EXIT_COMMAND;
            }
        }
    }
    (code, None)
}

fn run_server(session: Session, cli: &Cli, port: u16) -> ExitCode {
    let repo = match &cli.data_dir {
        Some(d) => Repository::open(d.clone()),
        None => Ok(Repository::in_memory()),
    };
    let mut repo = match repo {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_COMMAND as u8);
        }
    };
    let doc = session.workbench().store().to_canonical_string();
    let rec = match repo.create("console", "console", Some(doc)) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_COMMAND as u8);
        }
    };
    println!("serving project {} on port {port}", rec.project_id);
    let _ = std::io::stdout().flush();
    let config = ServerConfig {
        token: cli.token.clone(),
        data_dir: cli.data_dir.clone(),
        port,
        ..ServerConfig::default()
    };
    let rt = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_COMMAND as u8);
        }
    };
    match rt.block_on(collab::serve(config, Arc::new(Hub::new(repo)))) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_COMMAND as u8)
        }
    }
}

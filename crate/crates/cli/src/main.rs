// Copyright 2026 qwfluor Contributors
// SPDX-License-Identifier: Apache-2.0

use clap::Parser;

use qwfluor_cli::{run, Cli, EXIT_OK};

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            std::process::exit(EXIT_OK);
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

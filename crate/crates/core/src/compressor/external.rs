use std::io::{self, Read, Write};
use std::process::{Command, Stdio};
use std::thread;

use super::CompressError;

/// Pipes `input` through `argv` and returns the number of bytes it wrote to stdout.
pub(crate) fn compressed_len(argv: &[String], input: &[u8]) -> Result<u64, CompressError> {
    let program = argv
        .first()
        .ok_or_else(|| CompressError::InvalidSpec("external command is empty".into()))?;
    let command_line = argv.join(" ");
    let mut child = Command::new(program)
        .args(&argv[1..])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|source| CompressError::Spawn {
            command: command_line.clone(),
            source,
        })?;

    let mut stdin = child.stdin.take().expect("stdin is piped");
    let mut stdout = child.stdout.take().expect("stdout is piped");
    let mut stderr = child.stderr.take().expect("stderr is piped");

    let (written, counted, captured) = thread::scope(|scope| {
        let writer = scope.spawn(move || {
            let res = stdin.write_all(input);
            drop(stdin);
            res
        });
        let err_reader = scope.spawn(move || {
            let mut buf = String::new();
            let _ = stderr.read_to_string(&mut buf);
            buf
        });
        let counted = io::copy(&mut stdout, &mut io::sink());
        (
            writer.join().expect("stdin writer panicked"),
            counted,
            err_reader.join().expect("stderr reader panicked"),
        )
    });

    let status = child.wait()?;
    if !status.success() {
        return Err(CompressError::ExternalFailed {
            command: command_line,
            status: status.code(),
            stderr: captured.trim().to_string(),
        });
    }
    // A compressor that stops reading early but exits cleanly produced a bogus size.
    written.map_err(CompressError::Io)?;
    Ok(counted?)
}

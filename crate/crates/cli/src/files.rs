use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use piv_core::fieldcore::{read_flo, read_pgm, write_flo, write_pgm};
use piv_core::{ScalarField2D, VectorField2D};

use crate::error::CliError;

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

pub fn load_pgm(path: &Path) -> Result<ScalarField2D, CliError> {
    read_pgm(open(path)?).map_err(|e| CliError::file(path, e))
}

pub fn load_flo(path: &Path) -> Result<VectorField2D, CliError> {
    read_flo(open(path)?).map_err(|e| CliError::file(path, e))
}

pub fn save_pgm(path: &Path, image: &ScalarField2D) -> Result<(), CliError> {
    let mut sink = create(path)?;
    write_pgm(image, &mut sink).map_err(|e| CliError::file(path, e))?;
    sink.flush().map_err(|e| CliError::io(path, e))
}

pub fn save_flo(path: &Path, flow: &VectorField2D) -> Result<(), CliError> {
    let mut sink = create(path)?;
    write_flo(flow, &mut sink).map_err(|e| CliError::file(path, e))?;
    sink.flush().map_err(|e| CliError::io(path, e))
}

pub fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

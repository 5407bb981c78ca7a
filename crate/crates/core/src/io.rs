//! File formats: game JSON, trajectory CSV, JSON reports.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::games::MatrixGame;

/// `{"n": <int>, "payoff_matrix": [[...]], "name": <string, optional>}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    pub n: usize,
    pub payoff_matrix: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl GameFile {
    pub fn into_game(self) -> Result<MatrixGame> {
        if self.payoff_matrix.len() != self.n {
            return Err(Error::invalid(format!(
                "payoff_matrix has {} rows, expected n = {}",
                self.payoff_matrix.len(),
                self.n
            )));
        }
        let game = MatrixGame::from_rows(&self.payoff_matrix)?;
        Ok(match self.name {
            Some(name) => game.with_name(name),
            None => game,
        })
    }

    pub fn from_game(g: &MatrixGame) -> Self {
        GameFile {
            n: g.n(),
            payoff_matrix: g.to_rows(),
            name: g.name().map(str::to_string),
        }
    }
}

pub fn parse_game(json: &str) -> Result<MatrixGame> {
    serde_json::from_str::<GameFile>(json)?.into_game()
}

pub fn load_game(path: impl AsRef<Path>) -> Result<MatrixGame> {
    parse_game(&fs::read_to_string(path)?)
}

pub fn save_game(g: &MatrixGame, path: impl AsRef<Path>) -> Result<()> {
    write_json(&GameFile::from_game(g), path)
}

/// 17 significant digits; round-trips every binary64 value.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Header `t,z_1..z_n,x_1..x_n,V`; `V` is empty for samples without a reference.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let n = traj.dim();
    let mut out = String::from("t");
    for i in 1..=n {
        let _ = write!(out, ",z_{i}");
    }
    for i in 1..=n {
        let _ = write!(out, ",x_{i}");
    }
    out.push_str(",V\n");
    for s in &traj.samples {
        out.push_str(&format_float(s.t));
        for v in s.z.iter().chain(&s.x) {
            out.push(',');
            out.push_str(&format_float(*v));
        }
        out.push(',');
        if let Some(v) = s.v {
            out.push_str(&format_float(v));
        }
        out.push('\n');
    }
    out
}

pub fn write_trajectory_csv(traj: &Trajectory, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, trajectory_csv(traj))?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let mut f = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

//! Scenario files: a versioned JSON document describing the field model, the
//! sensor array and which coefficients are signal and noise.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use sensornet::field::DEFAULT_RANK_TOL;
use sensornet::{
    fourier_extremal_positions, sample_coefficients, CoefficientMatrix, DesignProblem,
    GeneratingFunctionSet, SensorArray,
};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub function_set: FunctionSet,
    pub sensors: Sensors,
    pub signal_index: usize,
    #[serde(default)]
    pub noise_indices: Vec<usize>,
    #[serde(default)]
    pub integer_mode: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateOptions>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSet {
    Taylor {
        length_scale: f64,
        count: usize,
    },
    FourierSine {
        length_scale: f64,
        count: usize,
    },
    PointSources {
        sources: Vec<Vec<f64>>,
        exponent: f64,
        strengths: Vec<f64>,
    },
    Tabulated {
        values: Vec<Vec<f64>>,
    },
}

impl From<&FunctionSet> for GeneratingFunctionSet {
    fn from(fs: &FunctionSet) -> Self {
        match fs.clone() {
            FunctionSet::Taylor {
                length_scale,
                count,
            } => Self::Taylor {
                length_scale,
                count,
            },
            FunctionSet::FourierSine {
                length_scale,
                count,
            } => Self::FourierSine {
                length_scale,
                count,
            },
            FunctionSet::PointSources {
                sources,
                exponent,
                strengths,
            } => Self::PointSources {
                sources,
                exponent,
                strengths,
            },
            FunctionSet::Tabulated { values } => Self::Tabulated { values },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sensors {
    pub positions: Vec<Vec<f64>>,
    pub qubit_counts: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative noise-constraint residual.
    pub constraint: f64,
    /// Absolute eigenvalue distance for grouping twirl blocks.
    pub twirl: f64,
    /// Allowed deviation of the evolved state norm from 1.
    pub normalization: f64,
    /// Relative pivot threshold for the rank report.
    pub rank: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            constraint: sensornet::design::CONSTRAINT_TOL,
            twirl: sensornet::branch::TWIRL_TOL,
            normalization: sensornet::branch::NORM_TOL,
            rank: DEFAULT_RANK_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateOptions {
    /// One phase `Phi_k` per generating function.
    pub phases: Vec<f64>,
    /// Probe to simulate instead of the designed optimum.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    pub s: Vec<f64>,
    pub r: Vec<f64>,
}

/// A scenario checked and turned into library types.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub array: SensorArray,
    pub coefficients: CoefficientMatrix,
    pub problem: DesignProblem,
    pub tolerances: Tolerances,
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let file: Self = serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(CliError::Parse(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                file.schema_version
            )));
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Parse(msg) => CliError::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tolerances.unwrap_or_default()
    }

    /// Builds the design problem. `constraint_tol` overrides the file.
    pub fn resolve(&self, constraint_tol: Option<f64>) -> Result<Resolved, CliError> {
        let mut tolerances = self.tolerances();
        if let Some(tol) = constraint_tol {
            tolerances.constraint = tol;
        }
        let array = SensorArray::new(
            self.sensors.positions.clone(),
            self.sensors.qubit_counts.clone(),
        )?;
        let coefficients = sample_coefficients(&(&self.function_set).into(), &array)?;
        let problem = DesignProblem::for_array(
            coefficients.clone(),
            &array,
            self.signal_index,
            self.noise_indices.iter().copied(),
            self.integer_mode,
        )?
        .with_constraint_tol(tolerances.constraint)?;
        Ok(Resolved {
            array,
            coefficients,
            problem,
            tolerances,
        })
    }
}

/// Five sensors at `-2..=2` with budgets `(1,2,0,2,1)` estimating the cubic
/// Taylor coefficient while blind to orders 0, 1, 2 and 4.
pub fn taylor_example() -> ScenarioFile {
    ScenarioFile {
        schema_version: SCHEMA_VERSION,
        name: "taylor".into(),
        description: Some(
            "cubic coefficient of a Taylor expansion, orders 0, 1, 2 and 4 as noise".into(),
        ),
        function_set: FunctionSet::Taylor {
            length_scale: 1.0,
            count: 5,
        },
        sensors: Sensors {
            positions: [-2.0, -1.0, 0.0, 1.0, 2.0]
                .iter()
                .map(|&x| vec![x])
                .collect(),
            qubit_counts: vec![1, 2, 0, 2, 1],
        },
        signal_index: 3,
        noise_indices: vec![0, 1, 2, 4],
        integer_mode: false,
        tolerances: None,
        simulate: Some(SimulateOptions {
            phases: vec![0.4, -1.3, 0.8, 0.05, 2.1],
            probe: None,
        }),
    }
}

/// Fourth sine harmonic sampled at its antinodes, lower harmonics as noise.
pub fn fourier_example() -> ScenarioFile {
    let positions = fourier_extremal_positions(4, 1.0).expect("valid extremal positions");
    ScenarioFile {
        schema_version: SCHEMA_VERSION,
        name: "fourier".into(),
        description: Some("fourth sine harmonic at its antinodes, harmonics 1-3 as noise".into()),
        function_set: FunctionSet::FourierSine {
            length_scale: 1.0,
            count: 4,
        },
        sensors: Sensors {
            positions: positions.iter().map(|&x| vec![x]).collect(),
            qubit_counts: vec![2; 4],
        },
        signal_index: 3,
        noise_indices: vec![0, 1, 2],
        integer_mode: false,
        tolerances: None,
        simulate: Some(SimulateOptions {
            phases: vec![1.7, -0.6, 2.9, 0.2],
            probe: None,
        }),
    }
}

/// Three single-qubit sensors, a distant signal source and a noise dipole
/// (opposite charges at `z = +-1`) that vanishes on the `z = 0` plane, so the
/// noise row is proportional to `(0, 0, 1)`.
///
/// A dipole is not a single point source, so the sampled rows are stored as a
/// tabulated set.
pub fn pointsource_example() -> ScenarioFile {
    let positions = vec![
        vec![1.0, 0.0, 0.0],
        vec![0.0, 2.0, 0.0],
        vec![0.0, 0.0, 0.5],
    ];
    let array = SensorArray::new(positions.clone(), vec![1; 3]).expect("valid sensor array");
    let sources = GeneratingFunctionSet::PointSources {
        sources: vec![
            vec![3.0, 3.0, 2.0],
            vec![0.0, 0.0, 1.0],
            vec![0.0, 0.0, -1.0],
        ],
        exponent: 2.0,
        strengths: vec![1.0, 1.0, -1.0],
    };
    let f = sample_coefficients(&sources, &array).expect("sensors avoid the sources");
    let dipole: Vec<f64> = f.row(1).iter().zip(f.row(2)).map(|(a, b)| a + b).collect();
    ScenarioFile {
        schema_version: SCHEMA_VERSION,
        name: "pointsource".into(),
        description: Some(
            "inverse-square signal source at (3,3,2); noise from a dipole at z=+-1 that vanishes at the first two sensors"
                .into(),
        ),
        function_set: FunctionSet::Tabulated {
            values: vec![f.row(0).to_vec(), dipole],
        },
        sensors: Sensors {
            positions,
            qubit_counts: vec![1; 3],
        },
        signal_index: 0,
        noise_indices: vec![1],
        integer_mode: true,
        tolerances: None,
        simulate: Some(SimulateOptions {
            phases: vec![0.3, 1.9],
            probe: None,
        }),
    }
}

pub fn bundled_examples() -> Vec<ScenarioFile> {
    vec![taylor_example(), fourier_example(), pointsource_example()]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples_round_trip() {
        for sc in bundled_examples() {
            let back = ScenarioFile::from_json(&sc.to_json()).unwrap();
            assert_eq!(back, sc);
            sc.resolve(None).unwrap();
        }
    }

    #[test]
    fn dipole_row_vanishes_on_plane() {
        let sc = pointsource_example();
        let FunctionSet::Tabulated { values } = &sc.function_set else {
            panic!("tabulated")
        };
        assert_eq!(values[1][0], 0.0);
        assert_eq!(values[1][1], 0.0);
        assert!(values[1][2] > 3.0);
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(&taylor_example().to_json()).unwrap();
        v["colour"] = "red".into();
        assert!(matches!(
            ScenarioFile::from_json(&v.to_string()),
            Err(CliError::Parse(_))
        ));

        let mut v: serde_json::Value = serde_json::from_str(&taylor_example().to_json()).unwrap();
        v["function_set"]["order"] = 3.into();
        assert!(matches!(
            ScenarioFile::from_json(&v.to_string()),
            Err(CliError::Parse(_))
        ));

        let mut v: serde_json::Value = serde_json::from_str(&taylor_example().to_json()).unwrap();
        v["schema_version"] = 2.into();
        assert!(matches!(
            ScenarioFile::from_json(&v.to_string()),
            Err(CliError::Parse(_))
        ));
    }

    #[test]
    fn tolerances_default_per_field() {
        let mut v: serde_json::Value = serde_json::from_str(&taylor_example().to_json()).unwrap();
        v["tolerances"] = serde_json::json!({ "twirl": 1e-6 });
        let sc = ScenarioFile::from_json(&v.to_string()).unwrap();
        let tol = sc.tolerances();
        assert_eq!(tol.twirl, 1e-6);
        assert_eq!(tol.constraint, 1e-9);
        assert_eq!(tol.normalization, 1e-12);
        let resolved = sc.resolve(Some(1e-7)).unwrap();
        assert_eq!(resolved.problem.constraint_tol(), 1e-7);
    }
}

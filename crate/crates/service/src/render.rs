//! Images shown to workers and designers.

use crowdopt_core::photo::{enhance, EnhanceParams, Image};

use crate::error::{Result, ServiceError};
use crate::session::Domain;

/// Side of the square synthetic tile.
const TILE: u32 = 64;
/// Largest vector the synthetic tile will draw.
const MAX_SYNTHETIC_DIM: usize = 64;

pub fn parse_params(text: &str) -> Result<Vec<f64>> {
    let inner = text.trim().trim_start_matches('[').trim_end_matches(']');
    if inner.trim().is_empty() {
        return Err(ServiceError::Validation("params must not be empty".into()));
    }
    inner
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| ServiceError::Validation(format!("params entry {:?} is not a number", s.trim())))
        })
        .collect()
}

fn check_unit(params: &[f64]) -> Result<()> {
    match params.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        Some(v) => Err(ServiceError::Validation(format!("parameter {v} is outside [0, 1]"))),
        None => Ok(()),
    }
}

/// False-color tile: one vertical band per parameter, blue for 0 through
/// red for 1.
pub fn synthetic_tile(params: &[f64]) -> Image {
    let n = params.len();
    let pixels = (0..TILE * TILE)
        .map(|k| {
            let band = ((k % TILE) as usize * n) / TILE as usize;
            let v = params[band];
            [v, 1.0 - (2.0 * v - 1.0).abs(), 1.0 - v]
        })
        .collect();
    Image::new(TILE, TILE, pixels).expect("tile size matches pixel count")
}

/// PNG bytes for `params` in `domain`.
pub fn render_design(domain: Domain, params: &[f64], base: &Image) -> Result<Vec<u8>> {
    check_unit(params)?;
    let img = match domain {
        Domain::Photo => enhance(base, &EnhanceParams::from_slice(params)?),
        Domain::Synthetic => {
            if params.is_empty() || params.len() > MAX_SYNTHETIC_DIM {
                return Err(ServiceError::Validation(format!(
                    "synthetic designs need 1 to {MAX_SYNTHETIC_DIM} parameters, got {}",
                    params.len()
                )));
            }
            synthetic_tile(params)
        }
    };
    Ok(img.encode_png())
}

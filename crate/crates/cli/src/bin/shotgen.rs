//! Writes a project document whose disparity statistics are synthesized
//! from analytic scenes (planes at known depths).
//!
//! Usage: `shotgen SCENE.json [OUT.json]`

use std::process::ExitCode;

use serde::Deserialize;
use shotdesk_core::{synth_shot, ComfortLimits, CutRef, Geometry, ProjectDoc, SynthShot};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Scene {
    view: Geometry,
    #[serde(default)]
    limits: ComfortLimits,
    shots: Vec<SynthShot>,
    #[serde(default)]
    cuts: Vec<CutRef>,
}

fn build(text: &str) -> shotdesk_core::Result<ProjectDoc> {
    let scene: Scene = shotdesk_core::api::parse(text)?;
    let doc = ProjectDoc {
        view: scene.view,
        limits: scene.limits,
        shots: scene.shots.iter().map(synth_shot).collect::<Result<_, _>>()?,
        cuts: scene.cuts,
    };
    doc.validate()?;
    Ok(doc)
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(input) = args.first() else {
        eprintln!("usage: shotgen SCENE.json [OUT.json]");
        return ExitCode::from(3);
    };
    let result = std::fs::read_to_string(input)
        .map_err(|e| format!("{input}: {e}"))
        .and_then(|text| build(&text).map_err(|e| format!("{input}: {e}")));
    let doc = match result {
        Ok(doc) => doc,
        Err(e) => {
            eprintln!("shotgen: {e}");
            return ExitCode::from(3);
        }
    };
    let mut text = doc.to_json_string();
    text.push('\n');
    match args.get(1) {
        Some(out) => {
            if let Err(e) = std::fs::write(out, text) {
                eprintln!("shotgen: {out}: {e}");
                return ExitCode::from(3);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::SUCCESS
}

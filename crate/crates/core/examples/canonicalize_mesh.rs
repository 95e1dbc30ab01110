//! Reads a Triangle-format mesh and writes it back in canonical form.
//!
//!     cargo run -p specflow-core --example canonicalize_mesh -- <in> <out>

use std::path::PathBuf;

use specflow_core::mesh::{load_mesh, save_mesh};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<PathBuf> = std::env::args_os().skip(1).map(PathBuf::from).collect();
    let [input, output] = args.as_slice() else {
        return Err("usage: canonicalize_mesh <in> <out>".into());
    };
    let mesh = load_mesh(input)?;
    save_mesh(&mesh, output)?;
    println!(
        "{}: {} nodes, {} triangles, {} boundary components, min angle {:.1}°",
        output.display(),
        mesh.nodes().len(),
        mesh.triangles().len(),
        mesh.num_components(),
        mesh.min_angle_degrees()
    );
    Ok(())
}

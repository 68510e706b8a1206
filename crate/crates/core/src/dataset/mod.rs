//! Randomized load-case sampling, five-channel input encoding, mirroring
//! augmentation and the on-disk dataset container.

mod io;
mod templates;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use io::{
    read_dataset, read_manifest, write_dataset, DatasetManifest, ManifestEntry, Resolution,
    FORMAT_VERSION, MANIFEST_FILE,
};
pub use templates::{BcTemplate, Components, Constraint, NodeSet, Region};

use crate::error::{Error, Result};
use crate::fea::{solve_system, DensityField, GridDomain, LoadCase, MaterialModel, PointForce};
use crate::simp::{run_simp, SimpConfig};

pub const CHANNEL_COUNT: usize = 5;
pub const CHANNEL_NAMES: [&str; CHANNEL_COUNT] = [
    "initial_density",
    "force_x",
    "force_y",
    "von_mises",
    "strain_energy_density",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    /// Inclusive range for each force component, in newtons.
    pub force_range: [f64; 2],
    pub n_forces: usize,
    pub volfrac: f64,
    pub rmin: f64,
    pub seed: u64,
    pub nelx: usize,
    pub nely: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            force_range: [-100.0, 100.0],
            n_forces: 1,
            volfrac: 0.5,
            rmin: 1.5,
            seed: 0,
            nelx: 80,
            nely: 40,
        }
    }
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_forces == 0 {
            return Err(Error::param("n_forces must be at least 1"));
        }
        let [lo, hi] = self.force_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::param(format!("invalid force range [{lo}, {hi}]")));
        }
        GridDomain::new(self.nelx, self.nely)?;
        Ok(())
    }

    pub fn grid(&self) -> Result<GridDomain> {
        GridDomain::new(self.nelx, self.nely)
    }
}

/// Which mirror images have been applied to a sample.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MirrorFlags {
    /// Reflected across the vertical axis (`x -> -x`).
    pub x: bool,
    /// Reflected across the horizontal axis (`y -> -y`).
    pub y: bool,
}

impl MirrorFlags {
    pub const X: MirrorFlags = MirrorFlags { x: true, y: false };
    pub const Y: MirrorFlags = MirrorFlags { x: false, y: true };
    pub const XY: MirrorFlags = MirrorFlags { x: true, y: true };

    pub fn is_identity(&self) -> bool {
        !self.x && !self.y
    }

    pub fn compose(self, other: MirrorFlags) -> MirrorFlags {
        MirrorFlags {
            x: self.x ^ other.x,
            y: self.y ^ other.y,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    /// Index of the generated (un-mirrored) case this sample derives from.
    pub source_index: usize,
    pub bc_template_id: String,
    pub forces: Vec<PointForce>,
    pub fixed_dofs: Vec<usize>,
    pub seed: u64,
    pub converged: bool,
    pub iterations: usize,
    /// Compliance at the last SIMP iteration.
    pub compliance: f64,
    /// Mirror images applied after generation; non-identity means augmented.
    pub mirrored: MirrorFlags,
}

impl SampleMeta {
    pub fn augmented(&self) -> bool {
        !self.mirrored.is_identity()
    }

    pub fn load_case(&self) -> LoadCase {
        LoadCase::new(
            self.forces.clone(),
            self.fixed_dofs.clone(),
            self.bc_template_id.clone(),
        )
    }
}

/// One training pair: the five input channels and the SIMP target, in the
/// single-precision layout written to disk (channel-major, then row-major).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub nelx: usize,
    pub nely: usize,
    pub channels: Vec<f32>,
    pub target: Vec<f32>,
    pub meta: SampleMeta,
}

impl SampleRecord {
    pub fn channel(&self, c: usize) -> &[f32] {
        let n = self.nelx * self.nely;
        &self.channels[c * n..(c + 1) * n]
    }

    pub fn target_field(&self) -> Result<DensityField> {
        DensityField::from_f32(self.nelx, self.nely, &self.target)
    }

    pub fn grid(&self) -> Result<GridDomain> {
        GridDomain::new(self.nelx, self.nely)
    }
}

/// Deterministic per-sample stream: the global seed selects the key, the
/// sample index the stream.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws `config.n_forces` independent point loads on admissible nodes of
/// `template`, each component uniform in `config.force_range`.
pub fn sample_load_case<R: Rng + ?Sized>(
    rng: &mut R,
    template: &BcTemplate,
    grid: &GridDomain,
    config: &SamplingConfig,
) -> Result<LoadCase> {
    template.validate()?;
    let nodes = template.admissible_load_nodes(grid)?;
    if nodes.is_empty() {
        return Err(Error::param(format!(
            "template '{}' has no admissible load node on a {}x{} grid",
            template.id,
            grid.nely(),
            grid.nelx()
        )));
    }
    let [lo, hi] = config.force_range;
    let forces = (0..config.n_forces)
        .map(|_| {
            let node = nodes[rng.gen_range(0..nodes.len())];
            let fx = rng.gen_range(lo..=hi);
            let fy = rng.gen_range(lo..=hi);
            PointForce { node, fx, fy }
        })
        .collect();
    Ok(LoadCase::new(
        forces,
        template.fixed_dofs(grid)?,
        template.id.clone(),
    ))
}

/// Builds the five input channels for a load case: uniform `volfrac`, the
/// two force-component maps and the von Mises / strain-energy fields of the
/// uniform-density domain. Returned as a channel-major `f32` block.
pub fn encode_sample(
    grid: &GridDomain,
    lc: &LoadCase,
    mat: &MaterialModel,
    volfrac: f64,
) -> Result<Vec<f32>> {
    let n = grid.element_count();
    let mut channels = vec![0.0f32; CHANNEL_COUNT * n];
    channels[..n].fill(volfrac as f32);

    let mut fx = vec![0.0f64; n];
    let mut fy = vec![0.0f64; n];
    for f in &lc.forces {
        let around = grid.elements_around_node(f.node);
        let share = around.len() as f64;
        for (col, row) in around {
            let i = grid.field_index(col, row);
            fx[i] += f.fx / share;
            fy[i] += f.fy / share;
        }
    }

    let initial = DensityField::uniform(grid, volfrac)?;
    let sol = solve_system(grid, &initial, mat, lc)?;
    for i in 0..n {
        channels[n + i] = fx[i] as f32;
        channels[2 * n + i] = fy[i] as f32;
        channels[3 * n + i] = sol.von_mises[i] as f32;
        channels[4 * n + i] = sol.strain_energy_density[i] as f32;
    }
    Ok(channels)
}

#[inline]
fn negate(v: f32) -> f32 {
    if v == 0.0 {
        v
    } else {
        -v
    }
}

fn mirror_block(
    block: &[f32],
    nelx: usize,
    nely: usize,
    flags: MirrorFlags,
    negate_values: bool,
) -> Vec<f32> {
    let mut out = vec![0.0f32; block.len()];
    for row in 0..nely {
        for col in 0..nelx {
            let src_row = if flags.y { nely - 1 - row } else { row };
            let src_col = if flags.x { nelx - 1 - col } else { col };
            let v = block[src_row * nelx + src_col];
            out[row * nelx + col] = if negate_values { negate(v) } else { v };
        }
    }
    out
}

fn mirror_node(grid: &GridDomain, node: usize, flags: MirrorFlags) -> usize {
    let (col, row) = grid.node_position(node);
    let col = if flags.x { grid.nelx() - col } else { col };
    let row = if flags.y { grid.nely() - row } else { row };
    grid.node_index(col, row)
}

/// Applies one mirror image to every channel, the target and the load-case
/// metadata. Force components flip sign along the mirrored axis.
pub fn mirror_sample(sample: &SampleRecord, flags: MirrorFlags) -> Result<SampleRecord> {
    let grid = sample.grid()?;
    let (nelx, nely) = (sample.nelx, sample.nely);
    let n = nelx * nely;
    let mut channels = Vec::with_capacity(sample.channels.len());
    for c in 0..CHANNEL_COUNT {
        let flip = (c == 1 && flags.x) || (c == 2 && flags.y);
        channels.extend(mirror_block(
            &sample.channels[c * n..(c + 1) * n],
            nelx,
            nely,
            flags,
            flip,
        ));
    }
    let target = mirror_block(&sample.target, nelx, nely, flags, false);

    let mut meta = sample.meta.clone();
    for f in &mut meta.forces {
        f.node = mirror_node(&grid, f.node, flags);
        if flags.x {
            f.fx = if f.fx == 0.0 { f.fx } else { -f.fx };
        }
        if flags.y {
            f.fy = if f.fy == 0.0 { f.fy } else { -f.fy };
        }
    }
    let mut fixed: Vec<usize> = meta
        .fixed_dofs
        .iter()
        .map(|&d| 2 * mirror_node(&grid, d / 2, flags) + d % 2)
        .collect();
    fixed.sort_unstable();
    meta.fixed_dofs = fixed;
    meta.mirrored = meta.mirrored.compose(flags);

    Ok(SampleRecord {
        nelx,
        nely,
        channels,
        target,
        meta,
    })
}

/// The x-, y- and xy-mirror images of a sample, in that order.
pub fn mirror_augment(sample: &SampleRecord) -> Result<Vec<SampleRecord>> {
    [MirrorFlags::X, MirrorFlags::Y, MirrorFlags::XY]
        .into_iter()
        .map(|f| mirror_sample(sample, f))
        .collect()
}

/// Everything needed to reproduce a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub sampling: SamplingConfig,
    pub templates: Vec<BcTemplate>,
    /// Optimizer settings; `volfrac` and `rmin` are taken from `sampling`.
    pub simp: SimpConfig,
    pub material: MaterialModel,
    pub augment: bool,
}

impl GeneratorConfig {
    pub fn new(sampling: SamplingConfig, template_ids: &[&str]) -> Result<Self> {
        let templates = template_ids
            .iter()
            .map(|id| BcTemplate::builtin(id))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            sampling,
            templates,
            simp: SimpConfig::default(),
            material: MaterialModel::default(),
            augment: false,
        })
    }

    pub fn effective_simp(&self) -> SimpConfig {
        SimpConfig {
            volfrac: self.sampling.volfrac,
            rmin: self.sampling.rmin,
            ..self.simp
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sampling.validate()?;
        self.effective_simp().validate()?;
        self.material.validate()?;
        if self.templates.is_empty() {
            return Err(Error::param("at least one BC template is required"));
        }
        let grid = self.sampling.grid()?;
        for t in &self.templates {
            t.validate()?;
            t.fixed_dofs(&grid)?;
        }
        Ok(())
    }
}

/// Generates the un-mirrored case `index`: template draw, load sampling,
/// encoding and the SIMP solve.
pub fn generate_sample(config: &GeneratorConfig, index: usize) -> Result<SampleRecord> {
    let grid = config.sampling.grid()?;
    let mut rng = sample_rng(config.sampling.seed, index as u64);
    let template = &config.templates[rng.gen_range(0..config.templates.len())];
    let lc = sample_load_case(&mut rng, template, &grid, &config.sampling)?;
    let channels = encode_sample(&grid, &lc, &config.material, config.sampling.volfrac)?;
    let result = run_simp(&grid, &config.material, &lc, &config.effective_simp())?;
    Ok(SampleRecord {
        nelx: grid.nelx(),
        nely: grid.nely(),
        channels,
        target: result.density.values().iter().map(|&v| v as f32).collect(),
        meta: SampleMeta {
            source_index: index,
            bc_template_id: lc.bc_template_id,
            forces: lc.forces,
            fixed_dofs: lc.fixed_dofs,
            seed: config.sampling.seed,
            converged: result.converged,
            iterations: result.iterations,
            compliance: result.final_compliance(),
            mirrored: MirrorFlags::default(),
        },
    })
}

/// Generates `n` cases (times four with augmentation, each original followed
/// by its x, y and xy mirrors). Cases are independent, so `jobs > 1` only
/// changes wall time, never the output.
pub fn generate(config: &GeneratorConfig, n: usize, jobs: usize) -> Result<Vec<SampleRecord>> {
    config.validate()?;
    let build = |i: usize| -> Result<Vec<SampleRecord>> {
        let s = generate_sample(config, i)?;
        if config.augment {
            let mut out = vec![s.clone()];
            out.extend(mirror_augment(&s)?);
            Ok(out)
        } else {
            Ok(vec![s])
        }
    };
    let groups: Vec<Result<Vec<SampleRecord>>> = if jobs <= 1 {
        (0..n).map(build).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::param(format!("cannot build thread pool: {e}")))?;
        pool.install(|| (0..n).into_par_iter().map(build).collect())
    };
    let mut out = Vec::with_capacity(if config.augment { 4 * n } else { n });
    for g in groups {
        out.extend(g?);
    }
    Ok(out)
}

/// Re-runs SIMP on each stored load case in `indices` and returns the MSE
/// between the stored target and the fresh result, per index.
pub fn resolve_targets(
    samples: &[SampleRecord],
    indices: &[usize],
    simp: &SimpConfig,
    material: &MaterialModel,
) -> Result<Vec<f64>> {
    indices
        .iter()
        .map(|&i| {
            let s = samples
                .get(i)
                .ok_or_else(|| Error::param(format!("sample index {i} out of range")))?;
            let grid = s.grid()?;
            let res = run_simp(&grid, material, &s.meta.load_case(), simp)?;
            let mse = res
                .density
                .values()
                .iter()
                .zip(&s.target)
                .map(|(a, &b)| (a - f64::from(b)).powi(2))
                .sum::<f64>()
                / s.target.len() as f64;
            Ok(mse)
        })
        .collect()
}

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;
use crate::types::{Micros, ObjectId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ObjectKind {
    /// Plain data object (translated sentence, image tile, ...). Also used
    /// for base VM images.
    Data,
    /// A synthesized launch-VM state: base image plus a client overlay.
    LaunchVm,
}

impl ObjectKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ObjectKind::Data => "data",
            ObjectKind::LaunchVm => "launch_vm",
        }
    }
}

impl fmt::Display for ObjectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CatalogObject {
    pub id: ObjectId,
    pub kind: ObjectKind,
    pub size: u64,
    /// Base image this launch VM is synthesized from.
    pub base_id: Option<ObjectId>,
    /// Size of the overlay the client uploads for synthesis.
    pub overlay_size: Option<u64>,
    pub version: u64,
    pub ttl_us: Option<Micros>,
}

impl CatalogObject {
    pub fn data(id: u32, size: u64) -> Self {
        CatalogObject {
            id: ObjectId(id),
            kind: ObjectKind::Data,
            size,
            base_id: None,
            overlay_size: None,
            version: 0,
            ttl_us: None,
        }
    }

    pub fn launch_vm(id: u32, size: u64, base: u32, overlay_size: u64) -> Self {
        CatalogObject {
            id: ObjectId(id),
            kind: ObjectKind::LaunchVm,
            size,
            base_id: Some(ObjectId(base)),
            overlay_size: Some(overlay_size),
            version: 0,
            ttl_us: None,
        }
    }

    pub fn with_ttl(mut self, ttl_us: Micros) -> Self {
        self.ttl_us = Some(ttl_us);
        self
    }
}

/// Object size distribution, in bytes. Bounds are inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SizeDist {
    Fixed(u64),
    Uniform { min: u64, max: u64 },
}

impl SizeDist {
    pub fn min(&self) -> u64 {
        match *self {
            SizeDist::Fixed(v) => v,
            SizeDist::Uniform { min, .. } => min,
        }
    }

    pub fn max(&self) -> u64 {
        match *self {
            SizeDist::Fixed(v) => v,
            SizeDist::Uniform { max, .. } => max,
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> u64 {
        match *self {
            SizeDist::Fixed(v) => v,
            SizeDist::Uniform { min, max } => rng.random_range(min..=max),
        }
    }
}

impl fmt::Display for SizeDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SizeDist::Fixed(v) => write!(f, "{v}"),
            SizeDist::Uniform { min, max } => write!(f, "{min}..{max}"),
        }
    }
}

impl FromStr for SizeDist {
    type Err = String;

    /// `N` for a fixed size, `MIN..MAX` for an inclusive uniform range.
    fn from_str(s: &str) -> Result<Self, String> {
        let parse =
            |v: &str| v.trim().parse::<u64>().map_err(|_| format!("expected a byte count or MIN..MAX, got `{s}`"));
        match s.split_once("..") {
            Some((lo, hi)) => {
                let (min, max) = (parse(lo)?, parse(hi)?);
                if min > max {
                    return Err(format!("empty size range `{s}`"));
                }
                Ok(if min == max { SizeDist::Fixed(min) } else { SizeDist::Uniform { min, max } })
            }
            None => Ok(SizeDist::Fixed(parse(s)?)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CatalogSpec {
    pub data_objects: u32,
    pub launch_vms: u32,
    pub base_images: u32,
    pub data_size: SizeDist,
    pub base_size: SizeDist,
    pub vm_size: SizeDist,
    pub overlay_size: SizeDist,
    pub ttl_us: Option<Micros>,
}

impl Default for CatalogSpec {
    fn default() -> Self {
        CatalogSpec {
            data_objects: 1000,
            launch_vms: 0,
            base_images: 1,
            data_size: SizeDist::Uniform { min: 1_000, max: 100_000 },
            base_size: SizeDist::Fixed(20_000_000),
            vm_size: SizeDist::Fixed(24_000_000),
            overlay_size: SizeDist::Uniform { min: 500_000, max: 2_000_000 },
            ttl_us: None,
        }
    }
}

/// Immutable object universe. Ids are dense: `objects[i].id == ObjectId(i)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Catalog {
    objects: Vec<CatalogObject>,
    is_base: Vec<bool>,
}

impl Catalog {
    /// Validates and wraps a list of objects.
    pub fn from_objects(objects: Vec<CatalogObject>) -> Result<Self> {
        let err = |msg: String| Err(Error::Catalog(msg));
        let mut is_base = vec![false; objects.len()];
        for (i, obj) in objects.iter().enumerate() {
            if obj.id.index() != i {
                return err(format!("object at position {i} has id {}; ids must be dense", obj.id));
            }
            if obj.size == 0 {
                return err(format!("object {} has zero size", obj.id));
            }
            match obj.kind {
                ObjectKind::Data => {
                    if obj.base_id.is_some() || obj.overlay_size.is_some() {
                        return err(format!("data object {} carries launch-VM fields", obj.id));
                    }
                }
                ObjectKind::LaunchVm => {
                    let (Some(base), Some(overlay)) = (obj.base_id, obj.overlay_size) else {
                        return err(format!("launch VM {} needs both base_id and overlay_size", obj.id));
                    };
                    let Some(base_obj) = objects.get(base.index()) else {
                        return err(format!("launch VM {} references unknown base {base}", obj.id));
                    };
                    if base_obj.kind != ObjectKind::Data {
                        return err(format!("launch VM {} uses {base}, which is not a data object", obj.id));
                    }
                    if overlay == 0 || overlay >= base_obj.size {
                        return err(format!(
                            "launch VM {}: overlay {overlay} B must be positive and smaller than base {base} ({} B)",
                            obj.id, base_obj.size
                        ));
                    }
                    is_base[base.index()] = true;
                }
            }
        }
        Ok(Catalog { objects, is_base })
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn get(&self, id: ObjectId) -> Option<&CatalogObject> {
        self.objects.get(id.index())
    }

    pub fn objects(&self) -> &[CatalogObject] {
        &self.objects
    }

    /// True when some launch VM is synthesized from `id`.
    pub fn is_base(&self, id: ObjectId) -> bool {
        self.is_base.get(id.index()).copied().unwrap_or(false)
    }

    /// Objects clients ask for: everything except base images, in id order.
    pub fn requestable(&self) -> Vec<ObjectId> {
        self.objects.iter().map(|o| o.id).filter(|&id| !self.is_base(id)).collect()
    }

    pub fn total_bytes(&self) -> u64 {
        self.objects.iter().map(|o| o.size).sum()
    }
}

/// Builds a catalog: data objects first, then base images, then launch VMs.
/// Launch VMs are spread over the bases round-robin.
pub fn build_catalog(spec: &CatalogSpec, seed: u64) -> Result<Catalog> {
    let err = |msg: &str| Err(Error::Catalog(msg.to_string()));
    if spec.launch_vms > 0 && spec.base_images == 0 {
        return err("launch VMs need at least one base image");
    }
    let mut dists = vec![("data_size", spec.data_size)];
    if spec.launch_vms > 0 {
        dists.extend([("base_size", spec.base_size), ("vm_size", spec.vm_size), ("overlay_size", spec.overlay_size)]);
    }
    for (name, dist) in &dists {
        if dist.min() == 0 {
            return Err(Error::Catalog(format!("{name} must be positive")));
        }
    }
    if spec.launch_vms > 0 && spec.overlay_size.max() >= spec.base_size.min() {
        return err("overlay_size must stay below base_size");
    }
    if spec.ttl_us == Some(0) {
        return err("ttl must be positive");
    }

    let mut rng = rng::catalog_stream(seed);
    let mut objects = Vec::new();
    let mut next = 0u32;
    for _ in 0..spec.data_objects {
        objects.push(CatalogObject::data(next, spec.data_size.sample(&mut rng)));
        next += 1;
    }
    let bases = if spec.launch_vms > 0 { spec.base_images } else { 0 };
    let first_base = next;
    for _ in 0..bases {
        objects.push(CatalogObject::data(next, spec.base_size.sample(&mut rng)));
        next += 1;
    }
    for i in 0..spec.launch_vms {
        let base = first_base + i % bases;
        let size = spec.vm_size.sample(&mut rng);
        let overlay = spec.overlay_size.sample(&mut rng);
        objects.push(CatalogObject::launch_vm(next, size, base, overlay));
        next += 1;
    }
    if let Some(ttl) = spec.ttl_us {
        for obj in &mut objects {
            obj.ttl_us = Some(ttl);
        }
    }
    Catalog::from_objects(objects)
}

fn opt<T: fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |v| v.to_string())
}

/// Writes the `id,kind,size,base_id|-,overlay_size|-,ttl_us|-` dump.
pub fn write_catalog(catalog: &Catalog, path: &Path) -> Result<()> {
    let mut out = String::from("# id,kind,size,base_id,overlay_size,ttl_us\n");
    for o in catalog.objects() {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            o.id,
            o.kind,
            o.size,
            opt(o.base_id),
            opt(o.overlay_size),
            opt(o.ttl_us)
        ));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_catalog(path: &Path) -> Result<Catalog> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut objects = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |msg: String| Error::TraceParse { path: path.to_path_buf(), line: idx + 1, msg };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 6 {
            return Err(bad(format!("expected 6 fields, found {}", fields.len())));
        }
        let num = |s: &str| s.parse::<u64>().map_err(|_| bad(format!("`{s}` is not an integer")));
        let opt_num = |s: &str| if s == "-" { Ok(None) } else { num(s).map(Some) };
        let kind = match fields[1] {
            "data" => ObjectKind::Data,
            "launch_vm" => ObjectKind::LaunchVm,
            other => return Err(bad(format!("unknown kind `{other}`"))),
        };
        let id = u32::try_from(num(fields[0])?).map_err(|_| bad("id out of range".into()))?;
        let base_id = opt_num(fields[3])?
            .map(|b| u32::try_from(b).map(ObjectId).map_err(|_| bad("base id out of range".into())))
            .transpose()?;
        objects.push(CatalogObject {
            id: ObjectId(id),
            kind,
            size: num(fields[2])?,
            base_id,
            overlay_size: opt_num(fields[4])?,
            version: 0,
            ttl_us: opt_num(fields[5])?,
        });
    }
    Catalog::from_objects(objects)
}

use std::fs;
use std::path::Path;

use thermogeo_core::image::{load_pgm, write_pgm};
use thermogeo_core::{FloatField, GrayImage};

use crate::CliError;

/// Sorted names of the regular files in `dir` ending with `suffix`.
pub fn list_files(dir: &Path, suffix: &str) -> Result<Vec<String>, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut names = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| CliError::io(dir, e))?;
        let is_file = entry
            .file_type()
            .map_err(|e| CliError::io(&entry.path(), e))?
            .is_file();
        if let (true, Some(name)) = (is_file, entry.file_name().to_str()) {
            if name.ends_with(suffix) {
                names.push(name.to_string());
            }
        }
    }
    names.sort();
    Ok(names)
}

pub fn load_image(path: &Path) -> Result<GrayImage, CliError> {
    load_pgm(path).map_err(|e| CliError::data(path.display(), e))
}

pub fn pgm_bytes(img: &GrayImage) -> Vec<u8> {
    let mut buf = Vec::new();
    write_pgm(img, &mut buf).expect("writing to memory cannot fail");
    buf
}

/// Rows of comma- or whitespace-separated reals, one image row per line.
pub fn parse_grid(text: &str) -> Result<FloatField, String> {
    let mut width = None;
    let mut data = Vec::new();
    let mut height = 0;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row: Vec<f64> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|e| format!("line {}: {s:?}: {e}", i + 1))
            })
            .collect::<Result<_, _>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(format!(
                    "line {}: {} values, previous rows have {w}",
                    i + 1,
                    row.len()
                ))
            }
            Some(_) => {}
        }
        data.extend(row);
        height += 1;
    }
    let width = width.ok_or("no data rows")?;
    FloatField::new(width, height, data).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let f = parse_grid("# heights\n1, 2, 3\n4 5 6\n\n").unwrap();
        assert_eq!((f.width(), f.height()), (3, 2));
        assert_eq!(f.data(), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert!(parse_grid("1,2\n3").is_err());
        assert!(parse_grid("1,x").is_err());
        assert!(parse_grid("").is_err());
        assert!(parse_grid("1,nan").is_err());
    }

    #[test]
    fn listing_filters_and_sorts() {
        let dir = tempfile::tempdir().unwrap();
        for n in ["b_geom.pgm", "a_geom.pgm", "a_thermo.pgm"] {
            fs::write(dir.path().join(n), b"").unwrap();
        }
        fs::create_dir(dir.path().join("c_geom.pgm")).unwrap();
        assert_eq!(
            list_files(dir.path(), "_geom.pgm").unwrap(),
            vec!["a_geom.pgm", "b_geom.pgm"]
        );
    }
}

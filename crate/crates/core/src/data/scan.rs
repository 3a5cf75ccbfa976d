use std::path::{Path, PathBuf};

use image::{ImageFormat, ImageReader};
use walkdir::WalkDir;

use super::{io_err, DataError, ImageRef, CLASS_DIRS};
use crate::metrics::CLASS_NAMES;

/// A file that was found but excluded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skipped {
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScanResult {
    pub items: Vec<ImageRef>,
    pub skipped: Vec<Skipped>,
}

/// Checks the file content (not its extension) for a supported header.
fn probe(path: &Path) -> Result<(), String> {
    let reader = ImageReader::open(path)
        .map_err(|e| e.to_string())?
        .with_guessed_format()
        .map_err(|e| e.to_string())?;
    match reader.format() {
        Some(ImageFormat::Png | ImageFormat::Jpeg | ImageFormat::Bmp) => {}
        Some(other) => return Err(format!("unsupported format {other:?}")),
        None => return Err("not a recognized image".into()),
    }
    let (w, h) = reader.into_dimensions().map_err(|e| e.to_string())?;
    if w == 0 || h == 0 {
        return Err("zero-area image".into());
    }
    Ok(())
}

/// Lists every decodable image under `<root>/infected` and
/// `<root>/not_infected`, in lexicographic path order per class. Files that
/// are not PNG, JPEG or BMP images are reported in `skipped`.
pub fn scan_dataset(root: &Path) -> Result<ScanResult, DataError> {
    if let Some(missing) = CLASS_DIRS.iter().map(|d| root.join(d)).find(|d| !d.is_dir()) {
        return Err(DataError::MissingClassDir(missing));
    }
    let mut result = ScanResult::default();
    for (label, dir_name) in CLASS_DIRS.iter().enumerate() {
        let dir = root.join(dir_name);
        let before = result.items.len();
        for entry in WalkDir::new(&dir).sort_by_file_name() {
            let entry = entry.map_err(|e| {
                let path = e.path().map(Path::to_path_buf).unwrap_or_else(|| dir.clone());
                match e.into_io_error() {
                    Some(source) => DataError::Io { path, source },
                    None => DataError::Decode {
                        path,
                        message: "filesystem loop".into(),
                    },
                }
            })?;
            if !entry.file_type().is_file() {
                continue;
            }
            let path = entry.into_path();
            match probe(&path) {
                Ok(()) => result.items.push(ImageRef { path, label }),
                Err(reason) => result.skipped.push(Skipped { path, reason }),
            }
        }
        if result.items.len() == before {
            return Err(DataError::EmptyClass {
                class: CLASS_NAMES[label],
                dir,
            });
        }
    }
    Ok(result)
}

/// Creates `dir` and its parents.
pub(crate) fn ensure_dir(dir: &Path) -> Result<(), DataError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))
}

#[cfg(test)]
mod tests {
    use std::fs;

    use super::*;

    fn write_png(path: &Path) {
        image::RgbImage::from_pixel(4, 3, image::Rgb([10, 20, 30]))
            .save(path)
            .unwrap();
    }

    fn tree(infected: &[&str], healthy: &[&str]) -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        for (sub, names) in [("infected", infected), ("not_infected", healthy)] {
            fs::create_dir_all(dir.path().join(sub)).unwrap();
            for n in names {
                write_png(&dir.path().join(sub).join(n));
            }
        }
        dir
    }

    #[test]
    fn lists_in_lexicographic_order() {
        let dir = tree(&["c.png", "a.png", "b.png"], &["z.png", "y.png"]);
        let scan = scan_dataset(dir.path()).unwrap();
        let labels: Vec<usize> = scan.items.iter().map(|i| i.label).collect();
        assert_eq!(labels, vec![0, 0, 0, 1, 1]);
        let names: Vec<_> = scan
            .items
            .iter()
            .map(|i| i.path.file_name().unwrap().to_str().unwrap())
            .collect();
        assert_eq!(names, vec!["a.png", "b.png", "c.png", "y.png", "z.png"]);
        assert!(scan.skipped.is_empty());
    }

    #[test]
    fn empty_class() {
        let dir = tree(&[], &["a.png"]);
        let err = scan_dataset(dir.path()).unwrap_err();
        assert!(matches!(err, DataError::EmptyClass { class: "infected", .. }));
        assert!(err.to_string().contains("empty class"));
    }

    #[test]
    fn missing_class_dir() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir_all(dir.path().join("infected")).unwrap();
        match scan_dataset(dir.path()).unwrap_err() {
            DataError::MissingClassDir(p) => assert!(p.ends_with("not_infected")),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn text_files_are_skipped() {
        let dir = tree(&["a.png"], &["b.png"]);
        fs::write(dir.path().join("infected/notes.txt"), "hello").unwrap();
        fs::write(dir.path().join("not_infected/fake.png"), "not really a png").unwrap();
        let scan = scan_dataset(dir.path()).unwrap();
        assert_eq!(scan.items.len(), 2);
        assert_eq!(scan.skipped.len(), 2);
    }
}

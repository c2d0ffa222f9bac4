use std::path::PathBuf;

use vfkit_core::fixtures;
use vfkit_core::formats::{Instance, InstanceDocument};

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

/// Set `VFKIT_WRITE_FIXTURES=1` to regenerate the shipped files.
#[test]
fn shipped_files_match_fixtures() {
    let write = std::env::var("VFKIT_WRITE_FIXTURES").is_ok_and(|v| v == "1");
    for f in fixtures::all() {
        let path = fixture_dir().join(format!("{}.json", f.name));
        let text = format!("{}\n", f.document().canonical());
        if write {
            std::fs::create_dir_all(fixture_dir()).unwrap();
            std::fs::write(&path, &text).unwrap();
        }
        let on_disk = std::fs::read_to_string(&path).unwrap();
        assert_eq!(on_disk, text, "{} is stale", path.display());
    }
}

#[test]
fn shipped_files_round_trip() {
    for f in fixtures::all() {
        let path = fixture_dir().join(format!("{}.json", f.name));
        let inst = Instance::load(&path).unwrap();
        let doc = &inst.document;
        assert_eq!(InstanceDocument::parse(&doc.canonical()).unwrap(), *doc);
        assert_eq!(doc.canonical(), f.document().canonical());
        assert_eq!(doc.digest(), f.document().digest());
        for name in f.subgroups.keys() {
            let from_file = inst.subgroup(name).unwrap();
            let from_code = f.words(name);
            assert_eq!(from_file.len(), from_code.len());
            for (a, b) in from_file.iter().zip(&from_code) {
                assert!(inst.gog.equal(a, b));
            }
        }
    }
}

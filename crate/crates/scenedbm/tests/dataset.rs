mod common;

use std::collections::HashSet;

use scenedbm::dataset::{load_dataset, Split};
use scenedbm::Error;

#[test]
fn two_classes_of_three() {
    let dir = tempfile::tempdir().unwrap();
    common::write_scene_dataset(dir.path(), 2, 3, 16, 1);
    std::fs::write(dir.path().join("class00/notes.txt"), "ignored").unwrap();
    std::fs::write(dir.path().join("README"), "ignored").unwrap();

    let data = load_dataset(dir.path(), 2, 1, 7).unwrap();
    assert_eq!(data.classes, ["class00", "class01"]);
    assert_eq!(data.num_classes(), 2);
    assert_eq!(data.items.len(), 6);
    assert_eq!(data.train().count(), 4);
    assert_eq!(data.test().count(), 2);
    for class in 0..2 {
        let items: Vec<_> = data.items.iter().filter(|it| it.class == class).collect();
        assert_eq!(items.len(), 3);
        assert_eq!(items.iter().filter(|it| it.split == Split::Train).count(), 2);
        assert_eq!(items.iter().filter(|it| it.split == Split::Test).count(), 1);
    }
    let unique: HashSet<_> = data.items.iter().map(|it| &it.path).collect();
    assert_eq!(unique.len(), 6);
}

#[test]
fn leftover_images_are_unused() {
    let dir = tempfile::tempdir().unwrap();
    common::write_scene_dataset(dir.path(), 2, 5, 8, 1);
    let data = load_dataset(dir.path(), 2, 1, 0).unwrap();
    assert_eq!(data.split(Split::Unused).count(), 4);
}

#[test]
fn split_is_a_function_of_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    common::write_scene_dataset(dir.path(), 3, 12, 8, 2);
    let a = load_dataset(dir.path(), 4, 2, 11).unwrap();
    let b = load_dataset(dir.path(), 4, 2, 11).unwrap();
    assert_eq!(a, b);
    let others: Vec<_> = (12..16)
        .map(|s| load_dataset(dir.path(), 4, 2, s).unwrap().items)
        .collect();
    assert!(others.iter().any(|items| *items != a.items));
}

#[test]
fn insufficient_and_empty_classes() {
    let dir = tempfile::tempdir().unwrap();
    common::write_scene_dataset(dir.path(), 2, 3, 8, 1);
    let err = load_dataset(dir.path(), 3, 1, 0).unwrap_err();
    assert!(err.to_string().contains("insufficient images for class"), "{err}");

    std::fs::create_dir(dir.path().join("zzz_empty")).unwrap();
    let err = load_dataset(dir.path(), 1, 1, 0).unwrap_err();
    assert!(matches!(err, Error::Dataset(_)));
    assert!(err.to_string().contains("zzz_empty"), "{err}");

    let nothing = tempfile::tempdir().unwrap();
    assert!(load_dataset(nothing.path(), 1, 1, 0).is_err());
}

#[test]
fn unreadable_image_is_named() {
    let dir = tempfile::tempdir().unwrap();
    common::write_scene_dataset(dir.path(), 2, 2, 8, 1);
    std::fs::write(dir.path().join("class01/img001.ppm"), b"P6\n8 8\n255\nshort").unwrap();
    let err = load_dataset(dir.path(), 2, 0, 0).unwrap_err();
    assert!(err.to_string().contains("img001.ppm"), "{err}");
}

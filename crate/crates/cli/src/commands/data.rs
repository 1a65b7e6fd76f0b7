use anyhow::{Context, Result};
use valigen_core::dataset::{
    augment_manifest, ingest_manifest, stratified_split, AugmentSpec, SplitSpec,
};
use valigen_core::ClassCatalog;

use crate::{AugmentArgs, SplitArgs};

pub(super) fn split(a: SplitArgs) -> Result<i32> {
    let catalog = ClassCatalog::resolve(&a.catalog)?;
    let manifest = ingest_manifest(&a.manifest, &a.root, catalog.k())?;
    let spec = SplitSpec::from_decimal(&a.fraction, a.seed)?;
    let (train, test) = stratified_split(&manifest, &spec)?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    train.write_csv(a.out.join("train.csv"))?;
    test.write_csv(a.out.join("test.csv"))?;
    println!("class,name,train,test");
    for c in 0..catalog.k() {
        println!(
            "{c},{},{},{}",
            catalog.name(c),
            train.counts_per_class[c],
            test.counts_per_class[c]
        );
    }
    Ok(0)
}

pub(super) fn augment(a: AugmentArgs) -> Result<i32> {
    let catalog = ClassCatalog::resolve(&a.catalog)?;
    let spec = match &a.spec {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json_spec(&text)?
        }
        None => AugmentSpec::default(),
    };
    let manifest = ingest_manifest(&a.manifest, &a.root, catalog.k())?;
    let out = augment_manifest(&manifest, &spec, a.seed, a.copies, &a.out)?;
    out.write_csv(a.out.join("manifest.csv"))?;
    println!(
        "wrote {} augmented images to {}",
        out.len(),
        a.out.display()
    );
    Ok(0)
}

fn serde_json_spec(text: &str) -> Result<AugmentSpec> {
    let spec: AugmentSpec = serde_json::from_str(text).context("parsing augmentation spec")?;
    spec.validate()?;
    Ok(spec)
}

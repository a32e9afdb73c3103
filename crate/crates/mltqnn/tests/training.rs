use mltqnn::dataio::{generate_synthetic, load_dataset, SyntheticSpec};
use mltqnn::Parallel;
use mltqnn_core::model::{train_run, HybridModel, ModelConfig};

#[test]
fn validation_loss_falls_on_synthetic_gratings() {
    let dir = tempfile::tempdir().unwrap();
    generate_synthetic(&SyntheticSpec::standard(2), dir.path()).unwrap();
    let data = load_dataset(dir.path()).unwrap();
    let model = HybridModel::new(ModelConfig { epochs: 5, runs: 1, ..ModelConfig::canonical(4, 4) }).unwrap();
    let r = train_run(&model, &data.train, &data.validation, 0, &Parallel).unwrap();
    assert_eq!(r.history.len(), 5);
    // 200 samples in batches of 50.
    assert_eq!(r.steps.len(), 20);
    assert!(r.best_epoch > 1, "best epoch {}", r.best_epoch);
    assert!(r.best_val_loss < r.history[0].val_loss);
    assert_eq!(r.best_val_loss, r.history[r.best_epoch - 1].val_loss);
}

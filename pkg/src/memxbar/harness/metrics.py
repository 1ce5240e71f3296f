"""Classification metrics."""

import numpy as np


def confusion_matrix(pred, labels, n_classes: int) -> np.ndarray:
    """Rows are true classes, columns predicted classes."""
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (np.asarray(labels, dtype=np.int64), np.asarray(pred, dtype=np.int64)), 1)
    return cm


def metrics(pred, labels, n_classes: int | None = None) -> dict:
    """Accuracy, macro-F1 and the confusion matrix.

    Classes absent from both predictions and labels are left out of the
    macro average; a class with no predicted or no true members scores F1 = 0.
    """
    pred = np.asarray(pred, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if pred.shape != labels.shape:
        raise ValueError(f"{pred.size} predictions for {labels.size} labels")
    if n_classes is None:
        n_classes = int(max(pred.max(initial=0), labels.max(initial=0))) + 1
    cm = confusion_matrix(pred, labels, n_classes)
    tp = np.diag(cm).astype(float)
    fp = cm.sum(axis=0) - tp
    fn = cm.sum(axis=1) - tp
    present = (cm.sum(axis=0) + cm.sum(axis=1)) > 0
    denom = 2 * tp + fp + fn
    f1 = np.divide(2 * tp, denom, out=np.zeros_like(tp), where=denom > 0)
    acc = float(tp.sum() / max(1, labels.size))
    return {"accuracy": acc, "f1": float(f1[present].mean()) if present.any() else 0.0, "confusion": cm}

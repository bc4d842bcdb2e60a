"""Materialize the benchmark datasets as CSV files under data/.

Only the 30-feature diagnostic breast cancer set ships with scikit-learn and
works offline; everything else downloads from the UCI repository or the
torchvision mirrors, so run this somewhere with network access and copy the
data/ directory next to the configs.

    python tools/export_datasets.py wdbc            # offline
    python tools/export_datasets.py breastcancer diabetes adult credit
    python tools/export_datasets.py mnist_1v5 mnist_2v6 fmnist_shoes
"""

import argparse
import csv
import io
import os
import sys
import urllib.request

HERE = os.path.dirname(os.path.abspath(__file__))
DATA_DIR = os.path.join(os.path.dirname(HERE), "data")

UCI = "https://archive.ics.uci.edu/ml/machine-learning-databases"


def write_rows(name, header, rows):
    os.makedirs(DATA_DIR, exist_ok=True)
    path = os.path.join(DATA_DIR, f"{name}.csv")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    print(f"wrote {path} ({len(rows)} rows)")


def fetch(url):
    print(f"fetching {url}")
    with urllib.request.urlopen(url) as resp:
        return resp.read().decode("utf-8", errors="replace")


def export_wdbc():
    """Diagnostic breast cancer set bundled with scikit-learn (569 x 30)."""
    from sklearn.datasets import load_breast_cancer

    raw = load_breast_cancer()
    header = [n.replace(" ", "_") for n in raw.feature_names] + ["label"]
    rows = [list(x) + [int(y)] for x, y in zip(raw.data, raw.target)]
    write_rows("breastcancer_wdbc", header, rows)


def export_breastcancer():
    """Original Wisconsin set (683 complete rows x 9 integer features).

    This is the variant the stump-certification literature benchmarks on;
    label 1 marks the malignant class (code 4 in the source file).
    """
    text = fetch(f"{UCI}/breast-cancer-wisconsin/breast-cancer-wisconsin.data")
    header = [
        "clump_thickness", "uniformity_cell_size", "uniformity_cell_shape",
        "marginal_adhesion", "single_epithelial_cell_size", "bare_nuclei",
        "bland_chromatin", "normal_nucleoli", "mitoses", "label",
    ]
    rows = []
    for line in text.strip().splitlines():
        parts = line.split(",")
        if len(parts) != 11 or "?" in parts:
            continue
        rows.append(parts[1:10] + [1 if parts[10] == "4" else 0])
    write_rows("breastcancer", header, rows)


def export_diabetes():
    """Pima Indians diabetes (768 x 8)."""
    url = "https://raw.githubusercontent.com/jbrownlee/Datasets/master/pima-indians-diabetes.csv"
    text = fetch(url)
    header = [
        "pregnancies", "glucose", "blood_pressure", "skin_thickness",
        "insulin", "bmi", "pedigree", "age", "label",
    ]
    rows = [line.split(",") for line in text.strip().splitlines()]
    write_rows("diabetes", header, rows)


ADULT_COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education_num",
    "marital_status", "occupation", "relationship", "race", "sex",
    "capital_gain", "capital_loss", "hours_per_week", "native_country", "income",
]


def export_adult():
    """Adult census income (6 numerical + 8 categorical features)."""
    text = fetch(f"{UCI}/adult/adult.data")
    header = ADULT_COLUMNS[:-1] + ["label"]
    rows = []
    for line in text.strip().splitlines():
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 15 or "?" in parts:
            continue
        rows.append(parts[:-1] + [1 if parts[-1].startswith(">50K") else 0])
    write_rows("adult", header, rows)


def export_credit():
    """German credit (7 numerical + 13 categorical features)."""
    text = fetch(f"{UCI}/statlog/german/german.data")
    header = [f"a{i}" for i in range(1, 21)] + ["label"]
    rows = []
    for line in text.strip().splitlines():
        parts = line.split()
        if len(parts) != 21:
            continue
        rows.append(parts[:-1] + [1 if parts[-1] == "2" else 0])  # 2 = bad risk
    write_rows("credit", header, rows)


def export_image_pair(name, dataset_cls, class_a, class_b):
    """Binary image subset: one row per image, 784 pixel columns in [0, 1].

    Rows keep the official train/test boundary (train block first); the
    matching config is updated with the exact train-row count.
    """
    import json

    import torchvision

    header = [f"px{i}" for i in range(784)] + ["label"]
    rows = []
    n_train = 0
    for train in (True, False):
        ds = dataset_cls(root=os.path.join(DATA_DIR, "_raw"), train=train, download=True)
        images = ds.data.numpy().reshape(len(ds), -1) / 255.0
        labels = ds.targets.numpy()
        keep = (labels == class_a) | (labels == class_b)
        for x, y in zip(images[keep], labels[keep]):
            rows.append([f"{v:.6f}" for v in x] + [int(y == class_b)])
        if train:
            n_train = len(rows)
    write_rows(name, header, rows)
    config_path = os.path.join(os.path.dirname(HERE), "configs", f"{name}.json")
    if os.path.exists(config_path):
        with open(config_path) as fh:
            doc = json.load(fh)
        doc["split"] = {"kind": "head_count", "count": n_train}
        with open(config_path, "w") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")
        print(f"pinned split count {n_train} in {config_path}")


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("datasets", nargs="+", help="names: wdbc breastcancer diabetes "
                        "adult credit mnist_1v5 mnist_2v6 fmnist_shoes")
    parser.add_argument("--fmnist-classes", default="5,7",
                        help="fashion-MNIST class pair for fmnist_shoes")
    args = parser.parse_args(argv)
    for name in args.datasets:
        if name == "wdbc":
            export_wdbc()
        elif name == "breastcancer":
            export_breastcancer()
        elif name == "diabetes":
            export_diabetes()
        elif name == "adult":
            export_adult()
        elif name == "credit":
            export_credit()
        elif name in ("mnist_1v5", "mnist_2v6", "fmnist_shoes"):
            import torchvision

            if name == "mnist_1v5":
                export_image_pair(name, torchvision.datasets.MNIST, 1, 5)
            elif name == "mnist_2v6":
                export_image_pair(name, torchvision.datasets.MNIST, 2, 6)
            else:
                a, b = (int(c) for c in args.fmnist_classes.split(","))
                export_image_pair(name, torchvision.datasets.FashionMNIST, a, b)
        else:
            print(f"unknown dataset {name!r}", file=sys.stderr)
            return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

//! Split a labeled table into one standardized instance per label.

use l1pca::dataio::{partition_by_label, read_labeled, LabelColumn};

const TABLE: &str = "\
clump,size,shape,adhesion,mitoses,class
5,1,1,1,1,benign
3,1,1,1,1,benign
6,8,8,1,1,malignant
4,1,1,3,1,benign
8,10,10,8,1,malignant
1,1,1,1,1,benign
10,7,7,6,1,malignant
2,1,2,1,1,benign
7,4,6,4,1,malignant
4,1,1,1,1,unknown
";

fn main() -> l1pca::Result<()> {
    let path = std::env::temp_dir().join("l1pca_labeled_example.csv");
    std::fs::write(&path, TABLE).map_err(|e| l1pca::Error::Io { path: path.clone(), source: e })?;

    let table = read_labeled(&path, &LabelColumn::Name("class".into()))?;
    println!("{} rows, attributes {:?}", table.labels.len(), table.attribute_names);
    for group in partition_by_label(&table, 2)? {
        match &group.standardized {
            Some(s) => {
                let kept: Vec<&str> =
                    s.kept_columns.iter().map(|&j| table.attribute_names[j].as_str()).collect();
                println!("{:10} n={} kept {:?}", group.label, s.data.n(), kept);
            }
            None => println!("{:10} n={} not standardizable", group.label, group.rows.len()),
        }
    }
    Ok(())
}

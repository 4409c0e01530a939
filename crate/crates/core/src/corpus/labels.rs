use serde::{Deserialize, Serialize};

/// One of the eight policy-area classes a bill is filed under.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Label {
    pub id: String,
    pub name: String,
}

/// Ordered class list. Position in the list is the classifier output index.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSet {
    labels: Vec<Label>,
}

pub const NUM_CLASSES: usize = 8;

const NASS_LABELS: [(&str, &str); NUM_CLASSES] = [
    ("NASS-1", "Education, Research and Technology"),
    ("NASS-2", "Energy, Environment and Natural Resources"),
    ("NASS-3", "Government Operations and International Affairs"),
    ("NASS-4", "Health and Agriculture"),
    ("NASS-5", "Labour, Sports and Social Welfare"),
    ("NASS-6", "Laws, Civil Rights, Safety and Security"),
    ("NASS-7", "Public Land, Housing and Transportation"),
    ("NASS-8", "Trade, Commerce and Macroeconomics"),
];

impl LabelSet {
    pub fn nass() -> Self {
        LabelSet {
            labels: NASS_LABELS
                .iter()
                .map(|(id, name)| Label {
                    id: (*id).to_string(),
                    name: (*name).to_string(),
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.labels.iter().position(|l| l.id == id)
    }

    pub fn get(&self, index: usize) -> Option<&Label> {
        self.labels.get(index)
    }

    pub fn id(&self, index: usize) -> &str {
        &self.labels[index].id
    }

    pub fn iter(&self) -> impl Iterator<Item = &Label> {
        self.labels.iter()
    }
}

impl Default for LabelSet {
    fn default() -> Self {
        Self::nass()
    }
}

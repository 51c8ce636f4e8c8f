"""CACTUS - Explainable classification of tabular data with missing values.

## Quick Start

```python
from cactus import Cactus, load_csv

# Load a labelled table (missing cells are "", "NA" or "NaN")
dataset = load_csv("patients.csv")

# Train: abstraction, per-class knowledge graphs, significance profile
model = Cactus.fit(dataset)

# Classify with one of the three metrics
results = model.classify(dataset, "CPR")
print(results[0].label, results[0].confidence)

# Explain: the nine most influential features
report = model.rank_report("CPR", top_k=9)

# Persist
model.save("model.json")
```
"""

from cactus.cactus import Cactus
from cactus.classifier import ClassificationResult, SignificanceProfile
from cactus.errors import CactusError
from cactus.explain import ConfidenceConfig, ConfidenceReport, RankReport
from cactus.harness import FragmentationSpec, SyntheticSpec, cross_validate, synthesize
from cactus.knowledge_graph import PageRankConfig
from cactus.models import FeatureKind, Flip, Metric
from cactus.tabular import Dataset, FilterSpec, SchemaConfig, load_csv

__version__ = "0.1.0"
__all__ = [
    "Cactus",
    "CactusError",
    "ClassificationResult",
    "ConfidenceConfig",
    "ConfidenceReport",
    "Dataset",
    "FeatureKind",
    "FilterSpec",
    "Flip",
    "FragmentationSpec",
    "Metric",
    "PageRankConfig",
    "RankReport",
    "SchemaConfig",
    "SignificanceProfile",
    "SyntheticSpec",
    "cross_validate",
    "load_csv",
    "synthesize",
]

"""Dataset registry: sources, canonical class orders, fixed ID splits.

The ID class indices follow the standard splits used by the downstream
pipeline; the class-name order pins how raw label strings map to indices.
"""

from dataclasses import dataclass


class UnknownDataset(Exception):
    pass


@dataclass(frozen=True)
class DatasetSource:
    name: str
    kind: str                  # "citation" (content/cites/texts) or "wiki-json"
    class_names: tuple
    id_class_indices: tuple
    object_word: str
    urls: tuple                # raw archives fetched into the raw dir


_REGISTRY = {
    "cora": DatasetSource(
        name="cora",
        kind="citation",
        class_names=("Case_Based", "Genetic_Algorithms", "Neural_Networks",
                     "Probabilistic_Methods", "Reinforcement_Learning",
                     "Rule_Learning", "Theory"),
        id_class_indices=(2, 4, 5, 6),
        object_word="paper",
        urls=("https://linqs-data.soe.ucsc.edu/public/lbc/cora.tgz",),
    ),
    "citeseer": DatasetSource(
        name="citeseer",
        kind="citation",
        class_names=("Agents", "AI", "DB", "IR", "ML", "HCI"),
        id_class_indices=(0, 1, 2),
        object_word="paper",
        urls=("https://linqs-data.soe.ucsc.edu/public/lbc/citeseer.tgz",),
    ),
    "pubmed": DatasetSource(
        name="pubmed",
        kind="citation",
        class_names=("Diabetes_Mellitus_Experimental", "Diabetes_Mellitus_Type_1",
                     "Diabetes_Mellitus_Type_2"),
        id_class_indices=(0, 1),
        object_word="paper",
        urls=("https://linqs-data.soe.ucsc.edu/public/Pubmed-Diabetes.tgz",),
    ),
    "wiki-cs": DatasetSource(
        name="wiki-cs",
        kind="wiki-json",
        class_names=("Computational_Linguistics", "Databases",
                     "Operating_Systems", "Computer_Architecture",
                     "Computer_Security", "Internet_Protocols",
                     "Computer_File_Systems",
                     "Distributed_Computing_Architecture", "Web_Technology",
                     "Programming_Language_Topics"),
        id_class_indices=(1, 4, 5, 6),
        object_word="article",
        urls=("https://github.com/pmernyei/wiki-cs-dataset/raw/master/dataset/data.json",),
    ),
}


def dataset_source(name):
    key = name.strip().lower().replace("_", "-").replace("wikics", "wiki-cs")
    if key not in _REGISTRY:
        raise UnknownDataset(f"unknown dataset {name!r}; known: {sorted(_REGISTRY)}")
    return _REGISTRY[key]

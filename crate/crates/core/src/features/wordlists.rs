//! Built-in French word classes for the baseline feature set, and small
//! demonstration lexicons. Real lexicons (sentiment, NRC, concreteness,
//! imageability, subjective frequency) are user-supplied files; the demo
//! entries below exist so the toolkit runs end to end out of the box.

pub const FIRST_PERSON_PRONOUNS: &[&str] = &[
    "je", "j'", "me", "m'", "moi", "nous", "je-même", "moi-même", "nous-mêmes",
];

pub const FIRST_PERSON_DETERMINERS: &[&str] =
    &["mon", "ma", "mes", "notre", "nos"];

pub const RELATIVE_PRONOUNS: &[&str] = &[
    "qui", "que", "qu'", "dont", "où", "lequel", "laquelle", "lesquels", "lesquelles", "auquel",
    "auxquels", "auxquelles", "duquel",
];

pub const NEGATION_WORDS: &[&str] = &[
    "ne", "n'", "pas", "jamais", "rien", "personne", "aucun", "aucune", "ni", "guère", "nul",
    "nulle", "sans",
];

pub const INVERTED_COMMAS: &[&str] = &["«", "»", "\"", "“", "”", "``", "''"];

pub const DEMO_SENTIMENT_POSITIVE: &[&str] = &[
    "bon", "bonne", "heureux", "excellent", "formidable", "magnifique", "succès", "espoir",
    "aimer", "réussir",
];

pub const DEMO_SENTIMENT_NEGATIVE: &[&str] = &[
    "mauvais", "triste", "désastre", "pauvre", "pire", "échec", "crise", "inutile", "peur",
    "colère",
];

pub const DEMO_NRC: &[&str] = &[
    "joie", "peur", "colère", "surprise", "confiance", "tristesse", "dégoût", "anticipation",
];

pub const DEMO_DEICTIC_TEMPORAL: &[&str] = &[
    "aujourd'hui", "hier", "demain", "maintenant", "actuellement", "désormais",
];

pub const DEMO_NONDEICTIC_TEMPORAL: &[&str] = &[
    "lundi", "mardi", "mercredi", "jeudi", "vendredi", "samedi", "dimanche", "janvier",
    "février", "gmt",
];

pub const DEMO_THINKING_VERBS: &[&str] = &[
    "penser", "croire", "imaginer", "imaginez", "estimer", "considérer", "oublier", "espérer",
];

pub const DEMO_QUOTING_VERBS: &[&str] = &[
    "dire", "affirmer", "affirmé", "déclarer", "déclaré", "préciser", "précise", "indiquer",
    "indiqué", "souligner", "ajouter", "expliquer", "selon",
];

pub const DEMO_PASSIVE_VERBS: &[&str] = &["été", "déposée", "déposé", "publiée", "publié"];

pub const DEMO_DISCOURSE_MARKERS: &[&str] = &[
    "bref", "certes", "cependant", "néanmoins", "toutefois", "d'ailleurs", "enfin", "donc",
];

pub const DEMO_CONCRETENESS: &[(&str, f64)] = &[
    ("chat", 4.5),
    ("table", 4.2),
    ("maison", 4.6),
    ("idée", 1.5),
    ("liberté", 1.2),
    ("concept", 1.3),
];

pub const DEMO_IMAGEABILITY: &[(&str, f64)] = &[
    ("chat", 6.2),
    ("maison", 6.0),
    ("idée", 2.1),
    ("justice", 2.5),
];

pub const DEMO_SUBJECTIVE_FREQUENCY: &[(&str, f64)] = &[
    ("ordinateur", 5.5),
    ("aéroport", 4.8),
    ("maison", 6.3),
    ("idéologie", 2.2),
];

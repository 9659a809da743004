//! English verb lexicon backing the reference rule tagger.
//!
//! Regular inflections are generated from the lemma list; irregular verbs
//! carry their past and participle forms explicitly.

use std::collections::HashMap;

use once_cell::sync::Lazy;

const REGULAR: &[&str] = &[
    "answer", "arrive", "ask", "attack", "bake", "bark", "believe", "bless", "bloom", "blossom",
    "boil", "bounce", "breathe", "brighten", "burgeon", "burn", "bury", "call", "caress", "carry",
    "carve", "change", "chase", "chew", "chill", "chime", "chirp", "chop", "clasp", "claw",
    "clean", "clear", "climb", "close", "collect", "conquer", "continue", "cook", "cover", "crack",
    "crash", "crave", "crawl", "create", "crumble", "crush", "cry", "curse", "damage", "dance",
    "darken", "dazzle", "defend", "depart", "descend", "desire", "destroy", "devour", "die", "dim",
    "dive", "doubt", "drag", "drape", "drift", "drown", "dry", "ease", "echo", "embrace",
    "empty", "encircle", "end", "endure", "enter", "escape", "fade", "fertilize", "fill", "fix",
    "flap", "flood", "flow", "flutter", "follow", "fold", "gather", "glare", "gleam",
    "glide", "glimmer", "glisten", "glitter", "glow", "gnaw", "grab", "grasp", "greet", "grieve",
    "groan", "guard", "guide", "hammer", "happen", "harm", "hate", "haunt", "heal", "help",
    "hover", "howl", "hum", "hunger", "hunt", "hurry", "hurt", "ignite", "imagine", "invade",
    "invite", "join", "jump", "kick", "kill", "kindle", "kiss", "knock", "laugh", "learn",
    "lift", "like", "limp", "linger", "listen", "live", "long", "look", "loosen", "love",
    "march", "melt", "mend", "mix", "moan", "move", "mourn", "murder", "murmur", "need",
    "notice", "observe", "open", "paddle", "pass", "patch", "pause", "pierce", "plan", "play",
    "plunge", "point", "pop", "pound", "pour", "praise", "pray", "press", "prevent", "protect",
    "pull", "pump", "punch", "push", "quiver", "race", "rattle", "ravage", "reach", "recall",
    "release", "relax", "remain", "remember", "rescue", "resolve", "rest", "return", "reveal", "roar",
    "roll", "ruin", "rush", "sail", "save", "scatter", "scream", "seem", "seize", "settle",
    "shatter", "shiver", "shout", "shudder", "sigh", "skip", "slap", "slice", "slip", "smile",
    "smolder", "smooth", "snap", "sniff", "soar", "sob", "sparkle", "spill", "squeeze", "stab",
    "start", "stay", "stimulate", "stir", "stop", "stretch", "strengthen", "stroll", "study", "stumble",
    "suffer", "surge", "surround", "swallow", "swarm", "sway", "swirl", "talk", "tap", "taste",
    "thank", "thaw", "tide", "touch", "travel", "tremble", "trip", "try", "tumble", "turn",
    "twirl", "twist", "unfurl", "unveil", "uplift", "uproot", "use", "visit", "wail", "wait",
    "walk", "wander", "want", "warm", "wash", "watch", "welcome", "whirl", "whisper", "wish",
    "wither", "wonder", "work", "worship", "wound", "wrap", "wreck", "yearn",
];

/// (lemma, past, past participle)
const IRREGULAR: &[(&str, &str, &str)] = &[
    ("arise", "arose", "arisen"),
    ("awake", "awoke", "awoken"),
    ("bear", "bore", "borne"),
    ("beat", "beat", "beaten"),
    ("become", "became", "become"),
    ("begin", "began", "begun"),
    ("bend", "bent", "bent"),
    ("bind", "bound", "bound"),
    ("bite", "bit", "bitten"),
    ("bleed", "bled", "bled"),
    ("blow", "blew", "blown"),
    ("break", "broke", "broken"),
    ("bring", "brought", "brought"),
    ("build", "built", "built"),
    ("burst", "burst", "burst"),
    ("buy", "bought", "bought"),
    ("catch", "caught", "caught"),
    ("choose", "chose", "chosen"),
    ("cling", "clung", "clung"),
    ("come", "came", "come"),
    ("creep", "crept", "crept"),
    ("cut", "cut", "cut"),
    ("dig", "dug", "dug"),
    ("do", "did", "done"),
    ("draw", "drew", "drawn"),
    ("dream", "dreamt", "dreamt"),
    ("drink", "drank", "drunk"),
    ("drive", "drove", "driven"),
    ("dwell", "dwelt", "dwelt"),
    ("eat", "ate", "eaten"),
    ("fall", "fell", "fallen"),
    ("feed", "fed", "fed"),
    ("feel", "felt", "felt"),
    ("fight", "fought", "fought"),
    ("find", "found", "found"),
    ("flee", "fled", "fled"),
    ("fling", "flung", "flung"),
    ("fly", "flew", "flown"),
    ("forget", "forgot", "forgotten"),
    ("forgive", "forgave", "forgiven"),
    ("freeze", "froze", "frozen"),
    ("get", "got", "gotten"),
    ("give", "gave", "given"),
    ("go", "went", "gone"),
    ("grow", "grew", "grown"),
    ("hang", "hung", "hung"),
    ("hear", "heard", "heard"),
    ("hide", "hid", "hidden"),
    ("hit", "hit", "hit"),
    ("hold", "held", "held"),
    ("keep", "kept", "kept"),
    ("kneel", "knelt", "knelt"),
    ("know", "knew", "known"),
    ("lay", "laid", "laid"),
    ("lead", "led", "led"),
    ("leap", "leapt", "leapt"),
    ("leave", "left", "left"),
    ("lend", "lent", "lent"),
    ("let", "let", "let"),
    ("light", "lit", "lit"),
    ("lose", "lost", "lost"),
    ("make", "made", "made"),
    ("mean", "meant", "meant"),
    ("meet", "met", "met"),
    ("overcome", "overcame", "overcome"),
    ("pay", "paid", "paid"),
    ("put", "put", "put"),
    ("read", "read", "read"),
    ("ride", "rode", "ridden"),
    ("ring", "rang", "rung"),
    ("rise", "rose", "risen"),
    ("run", "ran", "run"),
    ("say", "said", "said"),
    ("see", "saw", "seen"),
    ("seek", "sought", "sought"),
    ("sell", "sold", "sold"),
    ("send", "sent", "sent"),
    ("set", "set", "set"),
    ("shake", "shook", "shaken"),
    ("shine", "shone", "shone"),
    ("shoot", "shot", "shot"),
    ("shut", "shut", "shut"),
    ("sing", "sang", "sung"),
    ("sink", "sank", "sunk"),
    ("sit", "sat", "sat"),
    ("sleep", "slept", "slept"),
    ("slide", "slid", "slid"),
    ("speak", "spoke", "spoken"),
    ("spend", "spent", "spent"),
    ("spin", "spun", "spun"),
    ("split", "split", "split"),
    ("spread", "spread", "spread"),
    ("spring", "sprang", "sprung"),
    ("stand", "stood", "stood"),
    ("steal", "stole", "stolen"),
    ("stick", "stuck", "stuck"),
    ("sting", "stung", "stung"),
    ("stride", "strode", "stridden"),
    ("strike", "struck", "struck"),
    ("swear", "swore", "sworn"),
    ("sweep", "swept", "swept"),
    ("swell", "swelled", "swollen"),
    ("swim", "swam", "swum"),
    ("swing", "swung", "swung"),
    ("take", "took", "taken"),
    ("teach", "taught", "taught"),
    ("tear", "tore", "torn"),
    ("tell", "told", "told"),
    ("think", "thought", "thought"),
    ("throw", "threw", "thrown"),
    ("understand", "understood", "understood"),
    ("wake", "woke", "woken"),
    ("wear", "wore", "worn"),
    ("weave", "wove", "woven"),
    ("weep", "wept", "wept"),
    ("win", "won", "won"),
    ("write", "wrote", "written"),
];

/// Forms of `be` and `have` that do not follow any inflection rule.
const AUXILIARY: &[(&str, &str)] = &[
    ("be", "be"),
    ("am", "be"),
    ("is", "be"),
    ("are", "be"),
    ("was", "be"),
    ("were", "be"),
    ("been", "be"),
    ("being", "be"),
    ("have", "have"),
    ("has", "have"),
    ("had", "have"),
    ("having", "have"),
    ("does", "do"),
];

const VOWELS: &[char] = &['a', 'e', 'i', 'o', 'u'];

fn is_vowel(c: char) -> bool {
    VOWELS.contains(&c)
}

fn vowel_groups(word: &str) -> usize {
    let mut groups = 0;
    let mut prev = false;
    for c in word.chars() {
        let v = is_vowel(c);
        if v && !prev {
            groups += 1;
        }
        prev = v;
    }
    groups
}

/// Monosyllabic consonant-vowel-consonant stems double their final consonant.
fn doubles_final(word: &str) -> bool {
    let c: Vec<char> = word.chars().collect();
    let n = c.len();
    n >= 3
        && vowel_groups(word) == 1
        && !is_vowel(c[n - 1])
        && !matches!(c[n - 1], 'w' | 'x' | 'y')
        && is_vowel(c[n - 2])
        && !is_vowel(c[n - 3])
}

fn consonant_y(word: &str) -> bool {
    let c: Vec<char> = word.chars().collect();
    c.len() >= 2 && c[c.len() - 1] == 'y' && !is_vowel(c[c.len() - 2])
}

pub(crate) fn third_singular(lemma: &str) -> String {
    if consonant_y(lemma) {
        format!("{}ies", &lemma[..lemma.len() - 1])
    } else if ["s", "x", "z", "ch", "sh", "o"]
        .iter()
        .any(|s| lemma.ends_with(s))
    {
        format!("{lemma}es")
    } else {
        format!("{lemma}s")
    }
}

pub(crate) fn regular_past(lemma: &str) -> String {
    if lemma.ends_with('e') {
        format!("{lemma}d")
    } else if consonant_y(lemma) {
        format!("{}ied", &lemma[..lemma.len() - 1])
    } else if doubles_final(lemma) {
        let last = lemma.chars().last().unwrap_or_default();
        format!("{lemma}{last}ed")
    } else {
        format!("{lemma}ed")
    }
}

pub(crate) fn gerund(lemma: &str) -> String {
    if lemma.ends_with("ie") {
        format!("{}ying", &lemma[..lemma.len() - 2])
    } else if lemma.ends_with('e') && !["ee", "ye", "oe"].iter().any(|s| lemma.ends_with(s)) && lemma.len() > 2 {
        format!("{}ing", &lemma[..lemma.len() - 1])
    } else if doubles_final(lemma) {
        let last = lemma.chars().last().unwrap_or_default();
        format!("{lemma}{last}ing")
    } else {
        format!("{lemma}ing")
    }
}

pub struct Lexicon {
    forms: HashMap<String, &'static str>,
    lemmas: Vec<&'static str>,
}

impl Lexicon {
    fn build() -> Self {
        let mut forms: HashMap<String, &'static str> = HashMap::new();
        let mut lemmas = Vec::new();

        for &(form, lemma) in AUXILIARY {
            forms.insert(form.to_string(), lemma);
        }
        // Base forms win over derived ones ("left" is never a lemma here, but
        // "found" could be), so insert all of them first.
        for &lemma in REGULAR {
            forms.entry(lemma.to_string()).or_insert(lemma);
            lemmas.push(lemma);
        }
        for &(lemma, _, _) in IRREGULAR {
            forms.entry(lemma.to_string()).or_insert(lemma);
            lemmas.push(lemma);
        }
        for &lemma in REGULAR {
            let past = regular_past(lemma);
            for form in [third_singular(lemma), past, gerund(lemma)] {
                forms.entry(form).or_insert(lemma);
            }
        }
        for &(lemma, past, participle) in IRREGULAR {
            for form in [
                third_singular(lemma),
                past.to_string(),
                participle.to_string(),
                gerund(lemma),
            ] {
                forms.entry(form).or_insert(lemma);
            }
        }
        lemmas.sort_unstable();
        lemmas.dedup();
        Lexicon { forms, lemmas }
    }

    /// Lemma of a lowercase word form, if the word is a known verb form.
    pub fn lemma_of(&self, form: &str) -> Option<&'static str> {
        self.forms.get(form).copied()
    }

    pub fn lemmas(&self) -> &[&'static str] {
        &self.lemmas
    }

    /// Simple past of a lemma, or `None` for unknown lemmas.
    pub fn past_of(&self, lemma: &str) -> Option<String> {
        if let Some(&(_, past, _)) = IRREGULAR.iter().find(|(l, _, _)| *l == lemma) {
            return Some(past.to_string());
        }
        REGULAR.contains(&lemma).then(|| regular_past(lemma))
    }
}

pub static LEXICON: Lazy<Lexicon> = Lazy::new(Lexicon::build);

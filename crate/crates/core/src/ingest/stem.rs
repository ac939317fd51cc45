//! Porter stemmer plus the small lemma table used by the exact context rules.

/// Lowercases `word` and strips English suffixes with the Porter algorithm.
///
/// The stemmer is re-applied until it reaches a fixpoint, so
/// `stem(stem(w)) == stem(w)` holds for every input. Words containing
/// anything other than ASCII letters are only lowercased.
pub fn stem(word: &str) -> String {
    let lower = word.to_lowercase();
    if lower.len() <= 2 || !lower.bytes().all(|b| b.is_ascii_lowercase()) {
        return lower;
    }
    let mut current = lower.into_bytes();
    loop {
        let next = PorterStemmer::new(current.clone()).run();
        if next == current {
            break;
        }
        current = next;
    }
    String::from_utf8(current).expect("ascii input")
}

const IRREGULAR: &[(&str, &str)] = &[
    ("use", "use"),
    ("used", "use"),
    ("uses", "use"),
    ("using", "use"),
    ("perform", "perform"),
    ("performed", "perform"),
    ("performs", "perform"),
    ("performing", "perform"),
    ("be", "be"),
    ("is", "be"),
    ("are", "be"),
    ("was", "be"),
    ("were", "be"),
    ("been", "be"),
    ("being", "be"),
    ("analyse", "analyze"),
    ("analysed", "analyze"),
    ("analyses", "analyze"),
    ("analysing", "analyze"),
    ("analyze", "analyze"),
    ("analyzed", "analyze"),
    ("analyzes", "analyze"),
    ("analyzing", "analyze"),
    ("ran", "run"),
    ("run", "run"),
    ("running", "run"),
    ("runs", "run"),
];

/// Verb-normalizing lemma: the irregular table first, the stemmer otherwise.
pub fn lemma(word: &str) -> String {
    let lower = word.to_lowercase();
    IRREGULAR
        .iter()
        .find(|(form, _)| *form == lower)
        .map(|(_, base)| (*base).to_string())
        .unwrap_or_else(|| stem(&lower))
}

struct PorterStemmer {
    b: Vec<u8>,
    // end of the current word (inclusive)
    k: usize,
    // end of the stem when a suffix matched
    j: usize,
}

impl PorterStemmer {
    fn new(b: Vec<u8>) -> Self {
        let k = b.len() - 1;
        PorterStemmer { b, k, j: 0 }
    }

    fn run(mut self) -> Vec<u8> {
        if self.k > 1 {
            self.step1ab();
            if self.k > 0 {
                self.step1c();
                self.step2();
                self.step3();
                self.step4();
                self.step5();
            }
        }
        self.b.truncate(self.k + 1);
        self.b
    }

    fn is_cons(&self, i: usize) -> bool {
        match self.b[i] {
            b'a' | b'e' | b'i' | b'o' | b'u' => false,
            b'y' => i == 0 || !self.is_cons(i - 1),
            _ => true,
        }
    }

    /// Number of VC sequences in b[0..=j].
    fn measure(&self) -> usize {
        let mut n = 0;
        let mut i = 0;
        loop {
            if i > self.j {
                return n;
            }
            if !self.is_cons(i) {
                break;
            }
            i += 1;
        }
        i += 1;
        loop {
            loop {
                if i > self.j {
                    return n;
                }
                if self.is_cons(i) {
                    break;
                }
                i += 1;
            }
            i += 1;
            n += 1;
            loop {
                if i > self.j {
                    return n;
                }
                if !self.is_cons(i) {
                    break;
                }
                i += 1;
            }
            i += 1;
        }
    }

    fn vowel_in_stem(&self) -> bool {
        (0..=self.j).any(|i| !self.is_cons(i))
    }

    fn double_cons(&self, j: usize) -> bool {
        j >= 1 && self.b[j] == self.b[j - 1] && self.is_cons(j)
    }

    /// consonant-vowel-consonant ending at i, last consonant not w, x or y.
    fn cvc(&self, i: usize) -> bool {
        if i < 2 || !self.is_cons(i) || self.is_cons(i - 1) || !self.is_cons(i - 2) {
            return false;
        }
        !matches!(self.b[i], b'w' | b'x' | b'y')
    }

    fn ends(&mut self, s: &str) -> bool {
        let s = s.as_bytes();
        let len = s.len();
        if len > self.k + 1 {
            return false;
        }
        if &self.b[self.k + 1 - len..=self.k] != s {
            return false;
        }
        // j may underflow conceptually when the suffix is the whole word
        self.j = (self.k + 1 - len).wrapping_sub(1);
        true
    }

    fn stem_nonempty(&self) -> bool {
        self.j != usize::MAX
    }

    fn set_to(&mut self, s: &str) {
        let start = self.j.wrapping_add(1);
        self.b.truncate(start);
        self.b.extend_from_slice(s.as_bytes());
        self.k = self.b.len() - 1;
    }

    fn replace_if_measure(&mut self, s: &str, min: usize) {
        if self.stem_nonempty() && self.measure() > min {
            self.set_to(s);
        }
    }

    fn step1ab(&mut self) {
        if self.b[self.k] == b's' {
            if self.ends("sses") {
                self.k -= 2;
            } else if self.ends("ies") {
                self.set_to("i");
            } else if self.b[self.k - 1] != b's' {
                self.k -= 1;
            }
            self.b.truncate(self.k + 1);
        }
        if self.ends("eed") {
            if self.stem_nonempty() && self.measure() > 0 {
                self.k -= 1;
                self.b.truncate(self.k + 1);
            }
        } else if (self.ends("ed") || self.ends("ing"))
            && self.stem_nonempty()
            && self.vowel_in_stem()
        {
            self.k = self.j;
            self.b.truncate(self.k + 1);
            if self.ends("at") {
                self.set_to("ate");
            } else if self.ends("bl") {
                self.set_to("ble");
            } else if self.ends("iz") {
                self.set_to("ize");
            } else if self.double_cons(self.k) {
                if !matches!(self.b[self.k], b'l' | b's' | b'z') {
                    self.k -= 1;
                    self.b.truncate(self.k + 1);
                }
            } else {
                self.j = self.k;
                if self.measure() == 1 && self.cvc(self.k) {
                    self.j = self.k;
                    self.set_to_after_k("e");
                }
            }
        }
    }

    fn set_to_after_k(&mut self, s: &str) {
        self.b.truncate(self.k + 1);
        self.b.extend_from_slice(s.as_bytes());
        self.k = self.b.len() - 1;
    }

    fn step1c(&mut self) {
        if self.ends("y") && self.stem_nonempty() && self.vowel_in_stem() {
            self.b[self.k] = b'i';
        }
    }

    fn step2(&mut self) {
        const RULES: &[(&str, &str)] = &[
            ("ational", "ate"),
            ("tional", "tion"),
            ("enci", "ence"),
            ("anci", "ance"),
            ("izer", "ize"),
            ("bli", "ble"),
            ("alli", "al"),
            ("entli", "ent"),
            ("eli", "e"),
            ("ousli", "ous"),
            ("ization", "ize"),
            ("ation", "ate"),
            ("ator", "ate"),
            ("alism", "al"),
            ("iveness", "ive"),
            ("fulness", "ful"),
            ("ousness", "ous"),
            ("aliti", "al"),
            ("iviti", "ive"),
            ("biliti", "ble"),
            ("logi", "log"),
        ];
        self.apply_rules(RULES, 0);
    }

    fn step3(&mut self) {
        const RULES: &[(&str, &str)] = &[
            ("icate", "ic"),
            ("ative", ""),
            ("alize", "al"),
            ("iciti", "ic"),
            ("ical", "ic"),
            ("ful", ""),
            ("ness", ""),
        ];
        self.apply_rules(RULES, 0);
    }

    fn apply_rules(&mut self, rules: &[(&str, &str)], min_measure: usize) {
        for (suffix, replacement) in rules {
            if self.ends(suffix) {
                self.replace_if_measure(replacement, min_measure);
                return;
            }
        }
    }

    fn step4(&mut self) {
        const SUFFIXES: &[&str] = &[
            "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement", "ment", "ent", "ion",
            "ou", "ism", "ate", "iti", "ous", "ive", "ize",
        ];
        for suffix in SUFFIXES {
            if self.ends(suffix) {
                if *suffix == "ion"
                    && (!self.stem_nonempty() || !matches!(self.b[self.j], b's' | b't'))
                {
                    return;
                }
                if self.stem_nonempty() && self.measure() > 1 {
                    self.k = self.j;
                    self.b.truncate(self.k + 1);
                }
                return;
            }
        }
    }

    fn step5(&mut self) {
        self.j = self.k;
        if self.b[self.k] == b'e' && self.k > 0 {
            self.j = self.k - 1;
            let m = self.measure();
            if m > 1 || (m == 1 && !self.cvc(self.k - 1)) {
                self.k -= 1;
                self.b.truncate(self.k + 1);
            }
        }
        if self.b[self.k] == b'l' && self.double_cons(self.k) {
            self.j = self.k;
            if self.measure() > 1 {
                self.k -= 1;
                self.b.truncate(self.k + 1);
            }
        }
    }
}

use super::porter;
use super::stoplist::Stoplist;

/// Shortest token kept, in characters.
pub const MIN_TOKEN_CHARS: usize = 2;

const TERMINATORS: [char; 4] = ['.', '!', '?', ';'];

/// Splits on `. ! ? ;` and on blank lines, trimming and dropping empty
/// segments. Order is preserved.
pub fn tokenize_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut paragraph = String::new();
    let flush = |paragraph: &mut String, out: &mut Vec<String>| {
        out.extend(
            paragraph
                .split(TERMINATORS)
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_string),
        );
        paragraph.clear();
    };
    for line in text.lines() {
        if line.trim().is_empty() {
            flush(&mut paragraph, &mut out);
        } else {
            if !paragraph.is_empty() {
                paragraph.push('\n');
            }
            paragraph.push_str(line);
        }
    }
    flush(&mut paragraph, &mut out);
    out
}

/// Lowercased alphanumeric runs of at least [`MIN_TOKEN_CHARS`] characters.
pub fn tokenize_words(sentence: &str) -> Vec<String> {
    sentence
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| w.chars().count() >= MIN_TOKEN_CHARS)
        .map(str::to_lowercase)
        .collect()
}

pub fn remove_stopwords(tokens: Vec<String>, stoplist: &Stoplist) -> Vec<String> {
    tokens.into_iter().filter(|t| !stoplist.contains(t)).collect()
}

/// Porter stem of a lowercase token.
pub fn stem(token: &str) -> String {
    porter::stem(token)
}

/// Words of one sentence after stopword removal and stemming. Stems that
/// fall under the length floor or land on a stopword ("ons" → "on") are
/// dropped as well.
pub fn sentence_tokens(sentence: &str, stoplist: &Stoplist) -> Vec<String> {
    remove_stopwords(tokenize_words(sentence), stoplist)
        .iter()
        .map(|t| stem(t))
        .filter(|t| t.chars().count() >= MIN_TOKEN_CHARS && !stoplist.contains(t))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sentences() {
        assert_eq!(tokenize_sentences("Bush speaks. Crisis deepens!"), ["Bush speaks", "Crisis deepens"]);
        assert!(tokenize_sentences("").is_empty());
        assert_eq!(tokenize_sentences("One\n\nTwo"), ["One", "Two"]);
        assert_eq!(tokenize_sentences("a? b; c\n  \n\nd"), ["a", "b", "c", "d"]);
        assert_eq!(tokenize_sentences("no terminator\nsame paragraph"), ["no terminator\nsame paragraph"]);
    }

    #[test]
    fn words() {
        assert_eq!(tokenize_words("U.S.-Catalonia Talks"), ["catalonia", "talks"]);
        assert_eq!(tokenize_words("Bush Bush"), ["bush", "bush"]);
        assert!(tokenize_words("  ").is_empty());
        assert_eq!(tokenize_words("Qatar's 2022 Cup"), ["qatar", "2022", "cup"]);
    }

    #[test]
    fn stopwords() {
        let stop = Stoplist::bundled();
        let toks = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        assert_eq!(remove_stopwords(toks(&["the", "catalan", "crisis"]), &stop), ["catalan", "crisis"]);
        assert!(remove_stopwords(vec![], &stop).is_empty());
        let other = Stoplist::from_words(["zzz"]).unwrap();
        assert_eq!(remove_stopwords(toks(&["crisis"]), &other), ["crisis"]);
    }

    #[test]
    fn removal_happens_before_stemming() {
        // Stemmed first, "having" would become "have" and slip through.
        let stop = Stoplist::from_words(["having"]).unwrap();
        assert!(sentence_tokens("having", &stop).is_empty());
        assert_eq!(sentence_tokens("haves", &stop), ["have"]);
    }
}

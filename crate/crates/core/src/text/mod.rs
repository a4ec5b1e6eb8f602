//! Sentence and word tokenization, stopword removal, Porter stemming, and
//! the term index / formal context built from the resulting sentence units.

mod index;
mod porter;
mod stoplist;
mod tokenize;

pub use index::{build_context, build_index, preprocess, preprocess_article, SentenceUnit, TermIndex};
pub use stoplist::Stoplist;
pub use tokenize::{
    remove_stopwords, sentence_tokens, stem, tokenize_sentences, tokenize_words, MIN_TOKEN_CHARS,
};

#pragma once

#include <string>
#include <vector>

#include "freeprob/errors.hpp"

namespace freeprob::freecum {

/// Alphabet of generator names; a letter is a generator index plus an
/// optional star. Words are plain letter sequences: nothing is reduced,
/// "u,u*" stays two letters unless a functional's rule says otherwise.
using Alphabet = std::vector<std::string>;

struct Letter {
    int gen = 0;
    bool star = false;

    friend bool operator==(const Letter& a, const Letter& b) {
        return a.gen == b.gen && a.star == b.star;
    }
    friend bool operator!=(const Letter& a, const Letter& b) { return !(a == b); }
};

using Word = std::vector<Letter>;

inline Letter adjoint(const Letter& l) { return {l.gen, !l.star}; }

inline Word adjoint(const Word& w) {
    Word r;
    r.reserve(w.size());
    for (auto it = w.rbegin(); it != w.rend(); ++it) r.push_back(adjoint(*it));
    return r;
}

inline Word rotate_left(const Word& w, std::size_t k) {
    Word r;
    r.reserve(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) r.push_back(w[(i + k) % w.size()]);
    return r;
}

inline Word concat(const Word& a, const Word& b) {
    Word r = a;
    r.insert(r.end(), b.begin(), b.end());
    return r;
}

/// Subword at 1-based positions (ascending).
inline Word subword(const Word& w, const std::vector<int>& positions) {
    Word r;
    r.reserve(positions.size());
    for (int p : positions) {
        if (p < 1 || static_cast<std::size_t>(p) > w.size())
            throw invalid_input("subword: position out of range");
        r.push_back(w[static_cast<std::size_t>(p - 1)]);
    }
    return r;
}

/// Compact memoization key; generator indices must stay below 127.
inline std::string word_key(const Word& w) {
    std::string k;
    k.reserve(w.size());
    for (const auto& l : w) {
        if (l.gen < 0 || l.gen > 126) throw invalid_input("word_key: generator index out of range");
        k.push_back(static_cast<char>(l.gen * 2 + (l.star ? 1 : 0) + 1));
    }
    return k;
}

inline void check_word(const Word& w, const Alphabet& alphabet) {
    for (const auto& l : w)
        if (l.gen < 0 || static_cast<std::size_t>(l.gen) >= alphabet.size())
            throw invalid_input("word: letter outside alphabet");
}

inline std::string word_str(const Word& w, const Alphabet& alphabet) {
    std::string s;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (i) s += ",";
        s += alphabet[static_cast<std::size_t>(w[i].gen)];
        if (w[i].star) s += "*";
    }
    return s;
}

/// Parses "a,b*,a" against an alphabet.
inline Word parse_word(const std::string& text, const Alphabet& alphabet) {
    Word w;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t comma = text.find(',', pos);
        std::string tok = text.substr(pos, comma == std::string::npos ? std::string::npos
                                                                      : comma - pos);
        if (!tok.empty()) {
            bool star = tok.back() == '*';
            if (star) tok.pop_back();
            int gen = -1;
            for (std::size_t i = 0; i < alphabet.size(); ++i)
                if (alphabet[i] == tok) gen = static_cast<int>(i);
            if (gen < 0) throw invalid_input("parse_word: unknown letter '" + tok + "'");
            w.push_back({gen, star});
        } else if (!text.empty()) {
            throw invalid_input("parse_word: empty letter in '" + text + "'");
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return w;
}

} // namespace freeprob::freecum

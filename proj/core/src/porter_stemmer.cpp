// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The convsearch Authors

// Porter's suffix-stripping algorithm, following the structure of the
// reference C implementation (including its "bli"/"logi" departures).

#include "convsearch/tokenizer.hpp"

namespace convsearch {

namespace {

class PorterStemmer {
  public:
    explicit PorterStemmer(std::string_view word) : b_(word), k_(static_cast<int>(word.size()) - 1) {}

    std::string run()
    {
        if (k_ <= 1) {
            return b_;
        }
        step1ab();
        if (k_ > 0) {
            step1c();
            step2();
            step3();
            step4();
            step5();
        }
        return b_.substr(0, static_cast<std::size_t>(k_ + 1));
    }

  private:
    [[nodiscard]] char at(int i) const { return i >= 0 && i <= k_ ? b_[static_cast<std::size_t>(i)] : '\0'; }

    [[nodiscard]] bool cons(int i) const
    {
        switch (at(i)) {
        case 'a':
        case 'e':
        case 'i':
        case 'o':
        case 'u':
            return false;
        case 'y':
            return i == 0 ? true : !cons(i - 1);
        default:
            return true;
        }
    }

    // Number of VC sequences in b[0..j].
    [[nodiscard]] int m() const
    {
        int n = 0;
        int i = 0;
        while (true) {
            if (i > j_) {
                return n;
            }
            if (!cons(i)) {
                break;
            }
            ++i;
        }
        ++i;
        while (true) {
            while (true) {
                if (i > j_) {
                    return n;
                }
                if (cons(i)) {
                    break;
                }
                ++i;
            }
            ++i;
            ++n;
            while (true) {
                if (i > j_) {
                    return n;
                }
                if (!cons(i)) {
                    break;
                }
                ++i;
            }
            ++i;
        }
    }

    [[nodiscard]] bool vowel_in_stem() const
    {
        for (int i = 0; i <= j_; ++i) {
            if (!cons(i)) {
                return true;
            }
        }
        return false;
    }

    [[nodiscard]] bool double_consonant(int j) const
    {
        return j >= 1 && at(j) == at(j - 1) && cons(j);
    }

    [[nodiscard]] bool cvc(int i) const
    {
        if (i < 2 || !cons(i) || cons(i - 1) || !cons(i - 2)) {
            return false;
        }
        char ch = at(i);
        return ch != 'w' && ch != 'x' && ch != 'y';
    }

    bool ends(std::string_view s)
    {
        int len = static_cast<int>(s.size());
        if (len > k_ + 1) {
            return false;
        }
        if (std::string_view(b_).substr(static_cast<std::size_t>(k_ + 1 - len), s.size()) != s) {
            return false;
        }
        j_ = k_ - len;
        return true;
    }

    void set_to(std::string_view s)
    {
        b_.replace(static_cast<std::size_t>(j_ + 1), static_cast<std::size_t>(k_ - j_), s);
        k_ = j_ + static_cast<int>(s.size());
        b_.resize(static_cast<std::size_t>(k_ + 1));
    }

    void replace_if_measure(std::string_view s)
    {
        if (m() > 0) {
            set_to(s);
        }
    }

    void step1ab()
    {
        if (at(k_) == 's') {
            if (ends("sses")) {
                k_ -= 2;
            } else if (ends("ies")) {
                set_to("i");
            } else if (at(k_ - 1) != 's') {
                --k_;
            }
            b_.resize(static_cast<std::size_t>(k_ + 1));
        }
        if (ends("eed")) {
            if (m() > 0) {
                --k_;
            }
        } else if ((ends("ed") || ends("ing")) && vowel_in_stem()) {
            k_ = j_;
            b_.resize(static_cast<std::size_t>(k_ + 1));
            if (ends("at")) {
                set_to("ate");
            } else if (ends("bl")) {
                set_to("ble");
            } else if (ends("iz")) {
                set_to("ize");
            } else if (double_consonant(k_)) {
                char ch = at(k_);
                if (ch != 'l' && ch != 's' && ch != 'z') {
                    --k_;
                }
            } else if (j_ = k_, m() == 1 && cvc(k_)) {
                set_to("e");
            }
        }
        b_.resize(static_cast<std::size_t>(k_ + 1));
    }

    void step1c()
    {
        if (ends("y") && vowel_in_stem()) {
            b_[static_cast<std::size_t>(k_)] = 'i';
        }
    }

    void step2()
    {
        struct Rule {
            std::string_view suffix;
            std::string_view replacement;
        };
        static constexpr Rule kRules[] = {
            {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"},   {"anci", "ance"},
            {"izer", "ize"},    {"bli", "ble"},     {"alli", "al"},     {"entli", "ent"},
            {"eli", "e"},       {"ousli", "ous"},   {"ization", "ize"}, {"ation", "ate"},
            {"ator", "ate"},    {"alism", "al"},    {"iveness", "ive"}, {"fulness", "ful"},
            {"ousness", "ous"}, {"aliti", "al"},    {"iviti", "ive"},   {"biliti", "ble"},
            {"logi", "log"},
        };
        // The reference implementation dispatches on the penultimate letter;
        // every rule's suffix shares it, so the first matching rule wins.
        char key = at(k_ - 1);
        for (const auto& rule : kRules) {
            if (rule.suffix[rule.suffix.size() - 2] != key) {
                continue;
            }
            if (ends(rule.suffix)) {
                replace_if_measure(rule.replacement);
                return;
            }
        }
    }

    void step3()
    {
        struct Rule {
            std::string_view suffix;
            std::string_view replacement;
        };
        static constexpr Rule kRules[] = {
            {"icate", "ic"}, {"ative", ""}, {"alize", "al"}, {"iciti", "ic"},
            {"ical", "ic"},  {"ful", ""},   {"ness", ""},
        };
        char key = at(k_);
        for (const auto& rule : kRules) {
            if (rule.suffix.back() != key) {
                continue;
            }
            if (ends(rule.suffix)) {
                replace_if_measure(rule.replacement);
                return;
            }
        }
    }

    void step4()
    {
        static constexpr std::string_view kSuffixes[] = {
            "al",  "ance", "ence", "er",  "ic",  "able", "ible", "ant", "ement", "ment",
            "ent", "ion",  "ou",   "ism", "ate", "iti",  "ous",  "ive", "ize",
        };
        char key = at(k_ - 1);
        bool matched = false;
        for (auto suffix : kSuffixes) {
            if (suffix[suffix.size() - 2] != key) {
                continue;
            }
            if (!ends(suffix)) {
                continue;
            }
            if (suffix == "ion") {
                char c = at(j_);
                if (j_ < 0 || (c != 's' && c != 't')) {
                    continue;
                }
            }
            matched = true;
            break;
        }
        if (matched && m() > 1) {
            k_ = j_;
            b_.resize(static_cast<std::size_t>(k_ + 1));
        }
    }

    void step5()
    {
        j_ = k_;
        if (at(k_) == 'e') {
            int a = m();
            if (a > 1 || (a == 1 && !cvc(k_ - 1))) {
                --k_;
            }
        }
        if (at(k_) == 'l' && double_consonant(k_) && m() > 1) {
            --k_;
        }
        b_.resize(static_cast<std::size_t>(k_ + 1));
    }

    std::string b_;
    int k_;
    int j_ = 0;
};

}  // namespace

std::string porter_stem(std::string_view word)
{
    return PorterStemmer(word).run();
}

}  // namespace convsearch

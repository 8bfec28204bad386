#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

namespace cuebuddy::unicode {

struct CodePoint {
  UChar32 value;     // negative for an ill-formed byte sequence
  std::size_t size;  // bytes consumed
};

/// Decodes the code point at byte offset `pos`.
inline CodePoint decode_at(std::string_view text, std::size_t pos) {
  const auto* bytes = reinterpret_cast<const uint8_t*>(text.data());
  const auto length = static_cast<int32_t>(text.size());
  auto i = static_cast<int32_t>(pos);
  UChar32 c = 0;
  U8_NEXT(bytes, i, length, c);
  return {c, static_cast<std::size_t>(i) - pos};
}

/// True for code points that may appear inside a token: letters, combining
/// marks and digits. Everything else separates tokens.
inline bool is_word_char(UChar32 c) {
  if (c < 0) return false;
  switch (u_charType(c)) {
    case U_UPPERCASE_LETTER:
    case U_LOWERCASE_LETTER:
    case U_TITLECASE_LETTER:
    case U_MODIFIER_LETTER:
    case U_OTHER_LETTER:
    case U_NON_SPACING_MARK:
    case U_ENCLOSING_MARK:
    case U_COMBINING_SPACING_MARK:
    case U_DECIMAL_DIGIT_NUMBER:
    case U_LETTER_NUMBER:
    case U_OTHER_NUMBER:
      return true;
    default:
      return false;
  }
}

/// NFC, full case folding, NFC again. The second NFC pass makes the mapping
/// idempotent: fold() of an NFC string is not always NFC.
inline std::string fold_nfc(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) return std::string(text);
  icu::UnicodeString source = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  icu::UnicodeString folded = nfc->normalize(source, status);
  folded.foldCase();
  icu::UnicodeString result = nfc->normalize(folded, status);
  if (U_FAILURE(status)) return std::string(text);
  std::string out;
  result.toUTF8String(out);
  return out;
}

/// Number of code points in `text` (ill-formed bytes count one each).
inline std::size_t length(std::string_view text) {
  std::size_t n = 0;
  for (std::size_t pos = 0; pos < text.size(); ++n)
    pos += decode_at(text, pos).size;
  return n;
}

}  // namespace cuebuddy::unicode

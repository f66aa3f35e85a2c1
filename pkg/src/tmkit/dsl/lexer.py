from __future__ import annotations

from dataclasses import dataclass

from ..diagnostics import SourcePos, error

# longest first
PUNCT = ("->", "~>", "==", "!=", "<=", ">=",
         "{", "}", "(", ")", ".", ",", ":", "=", "$", "+", "-", "<", ">")

ESCAPES = {'"': '"', "\\": "\\", "n": "\n", "t": "\t"}


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT | NUMBER | STRING | PUNCT | EOF
    value: str
    pos: SourcePos

    def __str__(self) -> str:
        if self.kind == "EOF":
            return "end of input"
        if self.kind == "STRING":
            return "string"
        return repr(self.value)


class LexError(Exception):
    def __init__(self, diagnostic):
        self.diagnostic = diagnostic


def tokenize(text: str, filename: str = "<input>") -> list[Token]:
    tokens: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)

    def here() -> SourcePos:
        return SourcePos(filename, line, col)

    while i < n:
        c = text[i]
        if c == "\n":
            i, line, col = i + 1, line + 1, 1
            continue
        if c in " \t\r\f\v\ufeff":
            i, col = i + 1, col + 1
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        start = here()
        if c.isascii() and c.isalpha():
            j = i + 1
            while j < n and text[j].isascii() and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(Token("IDENT", text[i:j], start))
            col += j - i
            i = j
            continue
        if c.isascii() and c.isdigit():
            j = i + 1
            while j < n and text[j].isascii() and text[j].isdigit():
                j += 1
            if j + 1 < n and text[j] == "." and text[j + 1].isascii() and text[j + 1].isdigit():
                k = j + 1
                while k < n and text[k].isascii() and text[k].isdigit():
                    k += 1
                if k - j - 1 > 2:
                    raise LexError(error("E001", "number has more than two fractional "
                                                 "digits", start))
                j = k
            if j < n and text[j].isascii() and (text[j].isalpha() or text[j] == "_"):
                raise LexError(error("E001", f"malformed number {text[i:j + 1]!r}", start))
            tokens.append(Token("NUMBER", text[i:j], start))
            col += j - i
            i = j
            continue
        if c == '"':
            j, buf = i + 1, []
            cl, cc = line, col + 1
            while True:
                if j >= n or text[j] == "\n":
                    raise LexError(error("E001", "unterminated string", start))
                ch = text[j]
                if ch == '"':
                    break
                if ch == "\\":
                    if j + 1 >= n or text[j + 1] not in ESCAPES:
                        raise LexError(error("E001", "bad escape in string",
                                             SourcePos(filename, cl, cc)))
                    buf.append(ESCAPES[text[j + 1]])
                    j, cc = j + 2, cc + 2
                    continue
                buf.append(ch)
                j, cc = j + 1, cc + 1
            tokens.append(Token("STRING", "".join(buf), start))
            col = cc + 1
            i = j + 1
            continue
        for p in PUNCT:
            if text.startswith(p, i):
                tokens.append(Token("PUNCT", p, start))
                i, col = i + len(p), col + len(p)
                break
        else:
            raise LexError(error("E001", f"unexpected character {c!r}", start))
    tokens.append(Token("EOF", "", here()))
    return tokens

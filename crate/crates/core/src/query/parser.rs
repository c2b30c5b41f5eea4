use super::QueryAst;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    LParen,
    RParen,
    And,
    Or,
    Not,
    Word(String),
    Quoted(String),
}

#[derive(Debug)]
struct Spanned {
    token: Token,
    /// Character offset into the input.
    pos: usize,
}

fn parse_error(position: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        position,
        message: message.into(),
    }
}

fn tokenize(input: &str) -> Result<Vec<Spanned>> {
    let chars: Vec<char> = input.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let token = match c {
            '(' => {
                i += 1;
                Token::LParen
            }
            ')' => {
                i += 1;
                Token::RParen
            }
            '"' => {
                i += 1;
                let mut text = String::new();
                loop {
                    match chars.get(i) {
                        None => return Err(parse_error(start, "unterminated quote")),
                        Some('"') => {
                            i += 1;
                            break;
                        }
                        Some('\\') if matches!(chars.get(i + 1), Some('"' | '\\')) => {
                            text.push(chars[i + 1]);
                            i += 2;
                        }
                        Some(&ch) => {
                            text.push(ch);
                            i += 1;
                        }
                    }
                }
                Token::Quoted(text)
            }
            _ => {
                while i < chars.len()
                    && !chars[i].is_whitespace()
                    && !matches!(chars[i], '(' | ')' | '"')
                {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                match word.to_ascii_uppercase().as_str() {
                    "AND" => Token::And,
                    "OR" => Token::Or,
                    "NOT" => Token::Not,
                    _ => Token::Word(word),
                }
            }
        };
        tokens.push(Spanned { token, pos: start });
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Spanned>,
    next: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.next).map(|s| &s.token)
    }

    fn pos(&self) -> usize {
        self.tokens.get(self.next).map_or(self.end, |s| s.pos)
    }

    fn bump(&mut self) -> Option<Token> {
        let token = self.tokens.get(self.next).map(|s| s.token.clone());
        self.next += 1;
        token
    }

    fn parse_or(&mut self) -> Result<QueryAst> {
        let mut children = vec![self.parse_and()?];
        while self.peek() == Some(&Token::Or) {
            self.bump();
            children.push(self.parse_and()?);
        }
        Ok(if children.len() == 1 {
            children.pop().unwrap()
        } else {
            QueryAst::Or(children)
        })
    }

    fn parse_and(&mut self) -> Result<QueryAst> {
        let mut children = vec![self.parse_unary()?];
        loop {
            match self.peek() {
                Some(Token::And) => {
                    self.bump();
                    children.push(self.parse_unary()?);
                }
                Some(Token::Word(_) | Token::Quoted(_) | Token::LParen | Token::Not) => {
                    children.push(self.parse_unary()?);
                }
                _ => break,
            }
        }
        Ok(if children.len() == 1 {
            children.pop().unwrap()
        } else {
            QueryAst::And(children)
        })
    }

    fn parse_unary(&mut self) -> Result<QueryAst> {
        if self.peek() == Some(&Token::Not) {
            self.bump();
            return Ok(QueryAst::negate(self.parse_unary()?));
        }
        self.parse_primary()
    }

    fn parse_primary(&mut self) -> Result<QueryAst> {
        let pos = self.pos();
        match self.bump() {
            Some(Token::LParen) => {
                let inner = self.parse_or()?;
                match self.bump() {
                    Some(Token::RParen) => Ok(inner),
                    _ => Err(parse_error(pos, "unbalanced '('")),
                }
            }
            Some(Token::Word(word)) => QueryAst::leaf(&word),
            Some(Token::Quoted(text)) => {
                QueryAst::leaf(&text).map_err(|_| parse_error(pos, "empty phrase"))
            }
            Some(Token::RParen) => Err(parse_error(pos, "unexpected ')'")),
            Some(op) => Err(parse_error(pos, format!("unexpected operator {op:?}"))),
            None => Err(parse_error(pos, "unexpected end of input")),
        }
    }
}

/// Parses a Boolean query. Leaf text is normalized; error positions are
/// character offsets into `input`.
pub fn parse_query(input: &str) -> Result<QueryAst> {
    let tokens = tokenize(input)?;
    let end = input.chars().count();
    if tokens.is_empty() {
        return Err(parse_error(0, "empty query"));
    }
    let mut parser = Parser {
        tokens,
        next: 0,
        end,
    };
    let ast = parser.parse_or()?;
    if parser.next < parser.tokens.len() {
        let pos = parser.pos();
        let message = match parser.peek() {
            Some(Token::RParen) => "unbalanced ')'",
            _ => "unexpected token",
        };
        return Err(parse_error(pos, message));
    }
    Ok(ast)
}

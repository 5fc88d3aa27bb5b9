#pragma once

#include <stdexcept>
#include <string>

namespace aigt {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// corpus
struct ParseError : Error { using Error::Error; };
struct DuplicateIdError : Error { using Error::Error; };
struct MissingFieldError : Error { using Error::Error; };
struct EmptyStratumError : Error { using Error::Error; };
struct MissingLexiconError : Error { using Error::Error; };
struct UnknownParentError : Error { using Error::Error; };

// features
struct EmptyCorpusError : Error { using Error::Error; };

// detectors
struct SingleClassTrainingError : Error { using Error::Error; };
struct NonFiniteLossError : Error { using Error::Error; };
struct UntrainedModelError : Error { using Error::Error; };
struct EmptyTestSetError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
struct VersionMismatchError : Error { using Error::Error; };

// explain
struct TooManyTokensError : Error { using Error::Error; };
struct DegenerateDesignError : Error { using Error::Error; };

// rewrite
struct VocabularyTooSmallError : Error { using Error::Error; };
struct FormatError : Error { using Error::Error; };
struct UnsupportedLanguageError : Error { using Error::Error; };
struct PositionOutOfRangeError : Error { using Error::Error; };
struct StaleOffsetsError : Error { using Error::Error; };

// metrics
struct IdMismatchError : Error { using Error::Error; };
struct MissingBaselineError : Error { using Error::Error; };

// llmclient
struct ClientError : Error { using Error::Error; };
struct AuthError : ClientError { using ClientError::ClientError; };
struct RateLimitedError : ClientError { using ClientError::ClientError; };
struct TransportError : ClientError { using ClientError::ClientError; };
struct MalformedResponseError : ClientError { using ClientError::ClientError; };

}  // namespace aigt

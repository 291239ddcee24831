class InputError(ValueError):
    """Invalid arguments or data supplied by the caller."""


class ParseError(InputError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DivergenceError(RuntimeError):
    def __init__(self, iteration, loss):
        self.iteration = iteration
        self.loss = loss
        super().__init__(f"training diverged at iteration {iteration} (loss={loss!r})")


class NotDerivableError(ValueError):
    """No window of the reference trace satisfies the variance criterion."""

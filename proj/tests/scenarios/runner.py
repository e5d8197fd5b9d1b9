def polyglotEval(language, foreignCode):
    ret = None
    pass
    while inputCode != "":
        res = _execute(inputCode)
        pass
    return ret


inputCode = ""
while True:
    pass
    res = _execute(inputCode)


# Layout stub for the mock adapter: 2 polyglot breakpoint, 6 inner standby, 12 outer standby.

MODES = ('joint', 'factored', 'mfc', 'hybrid')
